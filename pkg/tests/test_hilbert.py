import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from ionwalk import hilbert
from ionwalk.hilbert import (TruncationError, coherent_overlap, coherent_state,
                             displacement_operator, fidelity, number_expectation, overlap)

from conftest import DELTA, coherent_brute

small_complex = st.complex_numbers(max_magnitude=3.0, allow_nan=False, allow_infinity=False)


def test_vacuum():
    v = coherent_state(0, 32)
    assert v[0] == 1 and np.all(v[1:] == 0)


def test_coherent_matches_direct_sum():
    for alpha in (DELTA, -0.7 + 1.2j, 2.5j):
        np.testing.assert_allclose(coherent_state(alpha, 60), coherent_brute(alpha, 60),
                                   atol=1e-14)


def test_vacuum_overlap_closed_form():
    v = coherent_state(DELTA, 64)
    assert abs(v[0]) == pytest.approx(np.exp(-DELTA ** 2 / 2), abs=1e-15)
    assert abs(v[0]) == pytest.approx(0.5143, abs=5e-5)


def test_number_expectation_step_size():
    assert number_expectation(coherent_state(DELTA, 64)) == pytest.approx(1.330, abs=1e-3)


def test_no_factorial_overflow_at_large_n():
    alpha = 15.0
    v = coherent_state(alpha, 420)
    assert np.all(np.isfinite(v))
    assert hilbert.norm(v) == pytest.approx(1.0, abs=1e-12)
    assert number_expectation(v) == pytest.approx(alpha ** 2, rel=1e-10)


def test_truncation_is_rejected():
    with pytest.raises(TruncationError, match="increase n_max"):
        coherent_state(3.0, 12)


def test_recommended_truncation_passes():
    for a in (0.5, 1.5, 3.5):
        coherent_state(a, hilbert.recommended_n_max(a))


def test_displacement_identity():
    np.testing.assert_array_equal(displacement_operator(0, 20), np.eye(21))


def test_displacement_creates_coherent_state():
    d = displacement_operator(DELTA, 64)
    np.testing.assert_allclose(d[:, 0], coherent_state(DELTA, 64), atol=1e-8)


def test_displacement_matches_matrix_exponential():
    n_max = 40
    a = hilbert.lowering(n_max)
    alpha = 0.8 - 0.4j
    ref = expm(alpha * a.conj().T - np.conj(alpha) * a)
    np.testing.assert_allclose(displacement_operator(alpha, n_max), ref, atol=1e-10)


def test_displacement_inverse():
    n_max = 64
    prod = displacement_operator(-DELTA, n_max) @ displacement_operator(DELTA, n_max)
    k = int(0.9 * (n_max + 1))
    np.testing.assert_allclose(prod[:k, :k], np.eye(k), atol=1e-7)


@settings(max_examples=20, deadline=None)
@given(small_complex, small_complex)
def test_displacement_composition_phase(alpha, beta):
    n_max = 96
    vac = hilbert.fock_state(0, n_max)
    lhs = displacement_operator(beta, n_max) @ displacement_operator(alpha, n_max) @ vac
    rhs = displacement_operator(alpha + beta, n_max) @ vac
    expected = np.exp(1j * (beta * np.conj(alpha)).imag)
    assert overlap(rhs, lhs) == pytest.approx(expected, abs=1e-7)


@settings(max_examples=20, deadline=None)
@given(small_complex)
def test_unitary_preserves_norm(alpha):
    n_max = 96
    d = displacement_operator(alpha, n_max)
    rng = np.random.default_rng(0)
    v = np.zeros(n_max + 1, dtype=complex)
    v[:20] = rng.normal(size=20) + 1j * rng.normal(size=20)
    v /= np.linalg.norm(v)
    assert hilbert.norm(d @ v) == pytest.approx(1.0, abs=1e-8)


@settings(max_examples=25, deadline=None)
@given(small_complex)
def test_lowering_eigenvalue(alpha):
    n_max = 96
    v = coherent_state(alpha, n_max)
    av = hilbert.lowering(n_max) @ v
    np.testing.assert_allclose(av, alpha * v, atol=1e-9)


def test_overlap_closed_form_neighbours():
    a, b = coherent_state(DELTA, 64), coherent_state(-DELTA, 64)
    direct = overlap(a, b)
    assert direct == pytest.approx(coherent_overlap(DELTA, -DELTA), abs=1e-12)
    assert abs(direct) == pytest.approx(0.0699, abs=5e-5)


def test_overlap_trivia():
    x = coherent_state(0.3 + 0.2j, 40)
    assert overlap(x, x) == pytest.approx(1.0)
    assert overlap(hilbert.fock_state(0, 5), hilbert.fock_state(1, 5)) == 0
    with pytest.raises(ValueError, match="mismatch"):
        overlap(np.zeros(3), np.zeros(4))


def test_joint_number_expectation_sums_coins():
    s = hilbert.joint_state([1, 1], coherent_state(DELTA, 64)) / np.sqrt(2)
    assert number_expectation(s) == pytest.approx(1.33, abs=1e-9)


def test_fidelity():
    a, b = 0.4 + 0.1j, -0.3 + 0.5j
    assert fidelity(coherent_state(a, 40), coherent_state(b, 40)) == pytest.approx(
        np.exp(-abs(a - b) ** 2), abs=1e-12)
    h = hilbert.joint_state(hilbert.H, hilbert.fock_state(0, 5))
    t = hilbert.joint_state(hilbert.T, hilbert.fock_state(0, 5))
    assert fidelity(h, h) == pytest.approx(1.0)
    assert fidelity(h, t) == 0.0


def test_truncation_doubling_stability():
    for alpha in (DELTA, 2.0 - 1.0j):
        lo = hilbert.recommended_n_max(abs(alpha))
        vals = []
        for n_max in (lo, 2 * lo):
            v = displacement_operator(alpha, n_max) @ hilbert.fock_state(0, n_max)
            vals.append((hilbert.norm(v), number_expectation(v),
                         overlap(coherent_state(0.5, n_max), v)))
        for x, y in zip(*vals):
            assert abs(x - y) < 1e-6


def test_quadrature_variances():
    v_min, v_max = hilbert.quadrature_variances(coherent_state(1.0 + 2.0j, 64))
    assert v_min == pytest.approx(0.5, abs=1e-9) and v_max == pytest.approx(0.5, abs=1e-9)
    # squeezed vacuum exp((r/2)(a^2 - a^dag^2)) has variances e^{-2r}/2 and e^{2r}/2
    n_max, r = 80, 0.4
    a = hilbert.lowering(n_max)
    s = expm(0.5 * r * (a @ a - a.conj().T @ a.conj().T)) @ hilbert.fock_state(0, n_max)
    v_min, v_max = hilbert.quadrature_variances(s)
    assert v_min == pytest.approx(0.5 * np.exp(-2 * r), abs=1e-8)
    assert v_max == pytest.approx(0.5 * np.exp(2 * r), abs=1e-8)

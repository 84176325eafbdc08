import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ionwalk import hilbert
from ionwalk.coin import COIN_TOSS, PI_PULSE, apply_coin, coin_probabilities, rotation
from ionwalk.hilbert import H, T

angles = st.floats(-4 * np.pi, 4 * np.pi, allow_nan=False)


def test_zero_rotation_is_identity():
    for phi in (0.0, 1.3, -2.0):
        np.testing.assert_allclose(rotation(0, phi), np.eye(2), atol=1e-15)


def test_coin_toss_matrix():
    np.testing.assert_allclose(COIN_TOSS, np.array([[1, 1], [-1, 1]]) / np.sqrt(2), atol=1e-15)
    np.testing.assert_allclose(COIN_TOSS @ [0, 1], np.array([1, 1]) / np.sqrt(2), atol=1e-15)


def test_pi_pulse_matrix():
    np.testing.assert_allclose(PI_PULSE, [[0, -1j], [-1j, 0]], atol=1e-15)


@settings(max_examples=100)
@given(angles, angles)
def test_rotation_unitary_and_inverse(theta, phi):
    r = rotation(theta, phi)
    np.testing.assert_allclose(r.conj().T @ r, np.eye(2), atol=1e-12)
    np.testing.assert_allclose(rotation(theta, phi) @ rotation(-theta, phi), np.eye(2), atol=1e-12)


def test_double_pi_pulse_is_minus_identity():
    state = hilbert.joint_state([0.6, 0.8j], hilbert.coherent_state(0.7, 30))
    out = apply_coin(apply_coin(state, PI_PULSE), PI_PULSE)
    np.testing.assert_allclose(out, -state, atol=1e-15)


def test_pi_pulse_exchanges_populations():
    state = hilbert.joint_state([np.sqrt(0.3), np.sqrt(0.7)], hilbert.fock_state(2, 5))
    p_h, p_t = coin_probabilities(apply_coin(state, PI_PULSE))
    assert (p_h, p_t) == pytest.approx((0.7, 0.3))


def test_coin_toss_from_tail_is_balanced():
    state = hilbert.joint_state(T, hilbert.fock_state(0, 10))
    assert coin_probabilities(apply_coin(state, COIN_TOSS)) == pytest.approx((0.5, 0.5))


def test_coin_leaves_motion_alone():
    motion = hilbert.coherent_state(1.1 - 0.3j, 40)
    for c in (H, T):
        out = apply_coin(hilbert.joint_state(c, motion), rotation(1.1, 0.4))
        for row in out:
            # each output row is proportional to the input motional vector
            np.testing.assert_allclose(row, row[0] / motion[0] * motion, atol=1e-13)
    state = hilbert.joint_state([0.6, 0.8], motion)
    out = apply_coin(state, rotation(0.9, 2.0))
    assert hilbert.number_expectation(out) == pytest.approx(hilbert.number_expectation(state),
                                                            abs=1e-13)

"""Truncated Fock-space representation of a single motional mode.

States are plain numpy arrays:

* a motional vector has shape ``(n_max + 1,)``;
* a joint coin/motion state has shape ``(2, n_max + 1)`` with row 0 the
  ``H`` coin component and row 1 the ``T`` component;
* operators are dense ``(n_max + 1, n_max + 1)`` complex matrices.
"""

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import gammaln

H, T = 0, 1

TAIL_FRACTION = 0.1
TAIL_TOLERANCE = 1e-6
UNITARITY_TOLERANCE = 1e-8


class TruncationError(ValueError):
    """Raised when a state leaks into the top of the truncated Fock space."""


def recommended_n_max(alpha_abs):
    """Smallest truncation that keeps a coherent state of ``|alpha|`` safe."""
    return int(np.ceil(alpha_abs ** 2 + 6 * alpha_abs + 10))


def fock_state(n, n_max):
    v = np.zeros(n_max + 1, dtype=complex)
    v[n] = 1.0
    return v


def joint_state(coin, motion):
    """Product state ``|coin> (x) |motion>``; ``coin`` is H, T or a 2-vector."""
    motion = np.asarray(motion, dtype=complex)
    if np.isscalar(coin) or np.ndim(coin) == 0:
        c = np.zeros(2, dtype=complex)
        c[int(coin)] = 1.0
    else:
        c = np.asarray(coin, dtype=complex)
    return np.outer(c, motion)


def n_max_of(state):
    return np.shape(state)[-1] - 1


def tail_probability(state, fraction=TAIL_FRACTION):
    """Probability held in the top ``fraction`` of the Fock levels."""
    state = np.asarray(state)
    dim = state.shape[-1]
    k = max(1, int(np.ceil(fraction * dim)))
    return float(np.sum(np.abs(state[..., dim - k:]) ** 2))


def check_truncation(state, what="state", tol=TAIL_TOLERANCE):
    tail = tail_probability(state)
    if tail >= tol:
        raise TruncationError(
            f"{what}: probability {tail:.3e} in the top {TAIL_FRACTION:.0%} of "
            f"Fock levels (n_max={n_max_of(state)}) exceeds {tol:g}; "
            "increase n_max")
    return tail


def lowering(n_max):
    return np.diag(np.sqrt(np.arange(1, n_max + 1, dtype=float)), 1).astype(complex)


def number_diag(n_max):
    return np.arange(n_max + 1, dtype=float)


def coherent_state(alpha, n_max, check=True):
    """Fock amplitudes of the coherent state ``|alpha>``.

    The amplitudes ``exp(-|a|^2/2) a^n / sqrt(n!)`` are built in log space,
    so no factorial is ever formed.

    Raises
    ------
    TruncationError
        If more than ``TAIL_TOLERANCE`` of the probability falls in the top
        10% of the retained levels (only when ``check`` is true).
    """
    alpha = complex(alpha)
    if not np.isfinite(alpha):
        raise ValueError(f"alpha must be finite, got {alpha}")
    n = np.arange(n_max + 1)
    amp = np.zeros(n_max + 1, dtype=complex)
    r = abs(alpha)
    if r == 0.0:
        amp[0] = 1.0
        return amp
    log_mag = -0.5 * r * r + n * np.log(r) - 0.5 * gammaln(n + 1)
    amp = np.exp(log_mag) * np.exp(1j * np.angle(alpha) * n)
    if check:
        check_truncation(amp, f"coherent_state(alpha={alpha:.4g})")
    return amp


def _quadrature_eigensystem(n_max):
    # eigenbasis of the truncated tridiagonal operator a + a^dagger
    off = np.sqrt(np.arange(1, n_max + 1, dtype=float))
    return eigh_tridiagonal(np.zeros(n_max + 1), off)


def displacement_operator(alpha, n_max, check=True):
    """Dense matrix of ``D(alpha) = exp(alpha a^dag - alpha^* a)``.

    Built by diagonalising the Hermitian generator ``i(alpha a^dag -
    alpha^* a)``, which is the rotated quadrature ``|alpha| X_phi`` with
    ``X_phi = a e^{-i phi} + a^dag e^{i phi}``.  Rotating by the phase of
    alpha reduces it to the real tridiagonal ``a + a^dag``.

    The phase convention is the standard one,
    ``D(b) D(a) = exp(i Im(b a^*)) D(a + b)``.

    Raises
    ------
    TruncationError
        If ``check`` is set and the result is not unitary to
        ``UNITARITY_TOLERANCE`` on the lower 90% of the basis.
    """
    alpha = complex(alpha)
    dim = n_max + 1
    if alpha == 0:
        return np.eye(dim, dtype=complex)
    r, phi = abs(alpha), np.angle(alpha)
    # alpha a^dag - alpha^* a = -i r Y with Y = i(e^{i phi} a^dag - e^{-i phi} a)
    # and Y = R X R^dag, R = exp(i(phi + pi/2) n), X = a + a^dag
    x, v = _quadrature_eigensystem(n_max)
    rot = np.exp(1j * (phi + np.pi / 2) * np.arange(dim))
    u = (rot[:, None] * v) @ np.diag(np.exp(-1j * r * x)) @ (v.T * rot.conj()[None, :])
    if check:
        defect = unitarity_defect(u)
        if defect >= UNITARITY_TOLERANCE:
            raise TruncationError(
                f"displacement_operator(alpha={alpha:.4g}): unitarity defect "
                f"{defect:.2e} on the lower 90% of n_max={n_max}; increase n_max")
    return u


def unitarity_defect(u, fraction=0.9):
    """``max |U^dag U - I|`` restricted to the lower ``fraction`` of the basis."""
    k = int(np.floor(fraction * u.shape[0]))
    g = u[:, :k].conj().T @ u[:, :k]
    return float(np.max(np.abs(g - np.eye(k))))


def overlap(a, b):
    """Inner product ``<a|b>`` of two motional vectors or two joint states."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return complex(np.vdot(a, b))


def norm(state):
    return float(np.sqrt(np.sum(np.abs(state) ** 2)))


def number_expectation(state):
    """Mean phonon number, summed over both coin rows for a joint state."""
    state = np.asarray(state)
    n = number_diag(n_max_of(state))
    return float(np.sum(n * np.abs(state) ** 2))


def fidelity(a, b):
    return abs(overlap(a, b)) ** 2


def fock_populations(state):
    """``|amp_n|^2``; a joint state is traced over the coin."""
    p = np.abs(np.asarray(state)) ** 2
    return p if p.ndim == 1 else p.sum(axis=0)


def coherent_overlap(alpha, beta):
    """Closed form ``<alpha|beta>`` for coherent states."""
    alpha, beta = complex(alpha), complex(beta)
    return np.exp(-0.5 * (abs(alpha) ** 2 + abs(beta) ** 2) + np.conj(alpha) * beta)


def quadrature_variances(v):
    """Smallest and largest variance of the rotated quadratures of ``v``.

    Quadratures are ``(a e^{-i t} + a^dag e^{i t}) / sqrt(2)``, so a
    coherent state gives ``(0.5, 0.5)``.  ``v`` is normalised first.
    """
    v = np.asarray(v, dtype=complex)
    v = v / norm(v)
    a = lowering(n_max_of(v))
    av = a @ v
    m_a = np.vdot(v, av)
    m_aa = np.vdot(v, a @ av)
    m_nd = np.vdot(av, av).real
    # Var(X_t) = 1/2 + <:dX^2:> in terms of centred moments
    c_aa = m_aa - m_a ** 2
    c_n = m_nd - abs(m_a) ** 2
    base = 0.5 + c_n
    amp = abs(c_aa)
    return float(base - amp), float(base + amp)

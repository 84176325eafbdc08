"""Blue-sideband Rabi frequencies beyond the Lamb-Dicke regime."""

from dataclasses import dataclass

import numpy as np


def laguerre_range(n_end, a, x):
    """``[L_0^a(x), ..., L_{n_end-1}^a(x)]`` by the three-term recurrence."""
    out = np.empty(n_end, dtype=float)
    if n_end == 0:
        return out
    out[0] = 1.0
    if n_end > 1:
        out[1] = 1.0 + a - x
    for n in range(2, n_end):
        out[n] = ((2 * n - 1 + a - x) * out[n - 1] - (n - 1 + a) * out[n - 2]) / n
    return out


def relative_bsb_rabi(eta, n_end):
    """``Omega_{n,n+1} / Omega`` for ``n = 0 .. n_end-1``, all orders in ``eta``."""
    n = np.arange(n_end)
    lag = laguerre_range(n_end, 1.0, eta * eta)
    return np.exp(-0.5 * eta * eta) * eta * lag / np.sqrt(n + 1.0)


@dataclass
class RabiCurve:
    """Blue-sideband Rabi frequencies, exact and in the Lamb-Dicke form."""

    n: np.ndarray
    exact: np.ndarray
    ld: np.ndarray
    eta: float
    omega: float

    @property
    def peak_n(self):
        return int(np.argmax(self.exact))

    @property
    def zero_n(self):
        """First ``n`` whose exact coupling has flipped sign (or vanished)."""
        s = np.sign(self.exact)
        idx = np.nonzero(s[1:] * s[:-1] <= 0)[0]
        return None if idx.size == 0 else int(idx[0] + 1)

    def as_dict(self):
        return {n: float(w) for n, w in zip(self.n, self.exact)}


def sideband_rabi_curve(eta, omega, n_max):
    """Rabi frequencies ``Omega_{n,n+1}`` for ``0 <= n < n_max``.

    The exact coupling is ``Omega exp(-eta^2/2) eta L_n^1(eta^2) / sqrt(n+1)``;
    the Lamb-Dicke approximation is ``sqrt(n+1) eta Omega``.
    """
    if eta <= 0:
        raise ValueError(f"eta must be positive, got {eta}")
    n = np.arange(n_max)
    exact = omega * relative_bsb_rabi(eta, n_max)
    ld = omega * eta * np.sqrt(n + 1.0)
    return RabiCurve(n, exact, ld, float(eta), float(omega))

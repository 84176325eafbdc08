"""Ideal walk protocols: the discrete line oracle, the coherent-state walk
with exact displacements, the impulsive-kick walk and the classical
comparator."""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import comb

from . import hilbert
from .coin import COIN_TOSS, apply_coin, coin_probabilities
from .hilbert import H, T, TruncationError

#: phase-space step size giving <n> = 1.33 after the first step
DEFAULT_STEP = float(np.sqrt(1.33))


@dataclass
class LineWalkState:
    """Amplitudes on the integer line, ``amp[coin, i + origin]``."""

    amp: np.ndarray
    origin: int

    @classmethod
    def localized(cls, coin=T, position=0, coin_vector=None):
        amp = np.zeros((2, 2 * abs(position) + 1), dtype=complex)
        if coin_vector is None:
            amp[coin, abs(position) + position] = 1.0
        else:
            amp[:, abs(position) + position] = coin_vector
        return cls(amp, abs(position))

    @property
    def positions(self):
        return np.arange(self.amp.shape[1]) - self.origin

    def padded(self, extra):
        amp = np.pad(self.amp, ((0, 0), (extra, extra)))
        return LineWalkState(amp, self.origin + extra)

    def entries(self, tol=0.0):
        """``{(coin, i): amplitude}`` for all entries with modulus above ``tol``."""
        out = {}
        for c in (H, T):
            for i, a in zip(self.positions, self.amp[c]):
                if abs(a) > tol:
                    out[(c, int(i))] = complex(a)
        return out

    def position_probs(self, tol=1e-15):
        p = np.sum(np.abs(self.amp) ** 2, axis=0)
        return {int(i): float(q) for i, q in zip(self.positions, p) if q > tol}

    def coin_probs(self):
        return coin_probabilities(self.amp)


@dataclass
class WalkReport:
    coin_probs: tuple
    position_probs: dict
    n_bar: float
    step_count: int
    estimator: str = "none"
    extra: dict = field(default_factory=dict)

    @property
    def p_h(self):
        return self.coin_probs[0]

    @property
    def p_t(self):
        return self.coin_probs[1]

    def to_dict(self):
        return {
            "step_count": self.step_count,
            "P_H": self.coin_probs[0],
            "P_T": self.coin_probs[1],
            "n_bar": self.n_bar,
            "estimator": self.estimator,
            "position_probs": {str(k): v for k, v in sorted(self.position_probs.items())},
            **self.extra,
        }


def line_walk(n_steps, coin=COIN_TOSS, initial=None):
    """Exact walk on the integer line; ``T`` steps to ``+1`` and ``H`` to ``-1``."""
    state = LineWalkState.localized(T) if initial is None else initial
    state = state.padded(n_steps)
    amp = state.amp
    for _ in range(n_steps):
        amp = coin @ amp
        shifted = np.zeros_like(amp)
        shifted[H, :-1] = amp[H, 1:]
        shifted[T, 1:] = amp[T, :-1]
        amp = shifted
    return LineWalkState(amp, state.origin)


def classical_walk(n_steps):
    """Symmetric binomial random walk distribution after ``n_steps``."""
    k = np.arange(n_steps + 1)
    p = comb(n_steps, k) / 2.0 ** n_steps
    return {int(2 * kk - n_steps): float(pk) for kk, pk in zip(k, p)}


def spread_statistics(dist):
    """Mean, variance and standard deviation of ``{position: probability}``."""
    if not dist:
        raise ValueError("empty distribution")
    x = np.array(list(dist.keys()), dtype=float)
    p = np.array(list(dist.values()), dtype=float)
    total = p.sum()
    if total <= 0:
        raise ValueError("distribution has no weight")
    p = p / total
    mean = float(np.sum(p * x))
    var = float(max(np.sum(p * (x - mean) ** 2), 0.0))
    return mean, var, float(np.sqrt(var))


def conditional_step_operator(delta, n_max, check=True):
    """Block-diagonal joint operator ``|T><T| D(+delta) + |H><H| D(-delta)``.

    Returned as a dense ``(2(n_max+1), 2(n_max+1))`` matrix with the H block
    first, matching ``state.reshape(-1)`` for a joint state.
    """
    dim = n_max + 1
    op = np.zeros((2 * dim, 2 * dim), dtype=complex)
    op[:dim, :dim] = hilbert.displacement_operator(-delta, n_max, check=check)
    op[dim:, dim:] = hilbert.displacement_operator(delta, n_max, check=check)
    return op


def apply_joint(op, state):
    state = np.asarray(state)
    return (op @ state.reshape(-1)).reshape(state.shape)


def coin_step(state, step_h, step_t):
    """Apply conditional motional operators to the H and T rows."""
    return np.stack([step_h @ state[H], step_t @ state[T]])


def _initial(initial, n_max):
    if initial is None:
        return hilbert.joint_state(T, hilbert.fock_state(0, n_max))
    initial = np.asarray(initial, dtype=complex)
    if hilbert.n_max_of(initial) != n_max:
        raise ValueError("initial state does not match n_max")
    return initial


def grid_amplitudes(state, delta, grid, direction=1.0):
    """Coefficients of ``state`` on the coherent grid ``|i * delta>``.

    Solves the Gram system of the (non-orthogonal) coherent states, using
    the closed-form overlaps, so a state that lies in the span of the grid
    is decomposed exactly.  Returns an array of shape ``(2, len(grid))``.
    """
    state = np.asarray(state)
    n_max = hilbert.n_max_of(state)
    alphas = np.asarray(grid) * delta * direction
    basis = np.array([hilbert.coherent_state(a, n_max, check=False) for a in alphas])
    gram = np.array([[hilbert.coherent_overlap(a, b) for b in alphas] for a in alphas])
    rhs = basis.conj() @ state.T
    coeffs = np.linalg.solve(gram, rhs)
    return coeffs.T


def _position_report(state, delta, n_steps, estimator, readout_options, direction=1.0):
    grid = np.arange(-n_steps, n_steps + 1)
    if estimator == "none":
        return {}
    if estimator == "grid":
        c = grid_amplitudes(state, delta, grid, direction)
        p = np.sum(np.abs(c) ** 2, axis=0)
        return {int(i): float(q) for i, q in zip(grid, p)}
    from .readout import position_distribution

    return position_distribution(state, None, delta * direction, grid,
                                 estimator=estimator, **(readout_options or {}))


def run_phase_walk(n_steps, delta=DEFAULT_STEP, n_max=128, initial=None, coin=COIN_TOSS,
                   estimator="fit", readout_options=None):
    """Coin toss followed by exact conditional displacements, ``n_steps`` times.

    Parameters
    ----------
    n_steps : int
    delta : complex
        Phase-space step; ``T`` moves by ``+delta`` and ``H`` by ``-delta``.
    n_max : int
        Fock truncation.
    initial : ndarray, optional
        Joint state, defaults to ``|T> (x) |0>``.
    estimator : {"fit", "projector", "grid", "none"}
        How ``position_probs`` is estimated; see
        :func:`ionwalk.readout.position_distribution`.

    Returns
    -------
    state : ndarray
    report : WalkReport

    Raises
    ------
    TruncationError
        When the walk climbs into the top of the Fock space.
    """
    state = _initial(initial, n_max)
    d_plus = hilbert.displacement_operator(delta, n_max)
    d_minus = hilbert.displacement_operator(-delta, n_max)
    for k in range(n_steps):
        state = apply_coin(state, coin)
        state = coin_step(state, d_minus, d_plus)
        hilbert.check_truncation(state, f"phase walk step {k + 1}")
    report = WalkReport(coin_probabilities(state),
                        _position_report(state, delta, n_steps, estimator, readout_options),
                        hilbert.number_expectation(state), n_steps, estimator)
    return state, report


def impulsive_n_max(n_steps, kick):
    return hilbert.recommended_n_max(n_steps * abs(kick))


def impulsive_walk(n_steps, kick=DEFAULT_STEP, n_max=None, directions=None, initial=None,
                   coin=COIN_TOSS, estimator="grid"):
    """Walk with instantaneous coin-conditioned kicks of size ``|kick|``.

    Each step displaces ``T`` by ``+kick * exp(i directions[k])`` and ``H`` by
    the opposite amount, independent of where the walker already is.  The
    default is a collinear walk along the phase of ``kick``.

    Kicks are applied through the action of the sparse generator
    (``scipy.sparse.linalg.expm_multiply``) so that ``n_max`` can reach the
    ``10^4`` levels needed for a hundred steps.  Position probabilities are
    only reported for collinear walks.
    """
    from scipy.sparse import block_diag, diags
    from scipy.sparse.linalg import expm_multiply

    kick = complex(kick)
    if n_max is None:
        n_max = impulsive_n_max(n_steps, kick)
    state = _initial(initial, n_max)
    if directions is None:
        directions = np.zeros(n_steps)
    directions = np.asarray(directions, dtype=float)
    if directions.shape != (n_steps,):
        raise ValueError("need one direction per step")
    sq = np.sqrt(np.arange(1, n_max + 1, dtype=float))
    a = diags(sq, 1)
    ad = diags(sq, -1)
    dim = n_max + 1
    norm0 = hilbert.norm(state)
    for k in range(n_steps):
        alpha = kick * np.exp(1j * directions[k])
        gen = alpha * ad - np.conj(alpha) * a
        # both branches in one call: H row by -gen, T row by +gen
        both = block_diag((-gen, gen), format="csr")
        state = apply_coin(state, coin)
        state = expm_multiply(both, state.reshape(-1)).reshape(2, dim)
        hilbert.check_truncation(state, f"impulsive walk step {k + 1}")
    collinear = np.allclose(directions, directions[0]) if n_steps else True
    if collinear and estimator != "none":
        direction = np.exp(1j * (directions[0] if n_steps else 0.0))
        if estimator == "grid":
            positions = _position_report(state, kick, n_steps, "grid", None, direction)
        else:
            positions = _position_report(state, kick, n_steps, estimator, None, direction)
        used = estimator
    else:
        positions, used = {}, "none"
    report = WalkReport(coin_probabilities(state), positions,
                        hilbert.number_expectation(state), n_steps, used,
                        {"norm_drift": abs(hilbert.norm(state) - norm0), "n_max": n_max})
    return state, report


__all__ = [
    "DEFAULT_STEP", "LineWalkState", "WalkReport", "TruncationError", "line_walk",
    "classical_walk", "spread_statistics", "conditional_step_operator", "apply_joint",
    "coin_step", "grid_amplitudes", "run_phase_walk", "impulsive_walk", "impulsive_n_max",
]

"""Emulation of the measurement chain.

Branch selection, displacing a position back to the origin, blue-sideband
flopping, population extraction, fluorescence detection, and the position
estimator assembled from them.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import nnls
from scipy.stats import poisson

from . import hilbert
from .dynamics.rabi import relative_bsb_rabi
from .hilbert import H, T

DEFAULT_OMEGA = 2 * np.pi * 500e3
DEFAULT_ETA = 0.31
DEFAULT_WINDOW = 100e-6
DEFAULT_BRIGHT_RATE = 200e3
DEFAULT_DARK_RATE = 1e3
BOOTSTRAP_SAMPLES = 100


class IllConditionedError(ValueError):
    pass


class EstimatorError(RuntimeError):
    pass


@dataclass
class FlopTrace:
    times: np.ndarray
    p_t: np.ndarray
    counts: np.ndarray = None
    shots_per_point: int = 0

    @property
    def measured(self):
        """Observed bright fraction, or the ideal curve without shot noise."""
        if self.shots_per_point > 0:
            return self.counts / self.shots_per_point
        return self.p_t


@dataclass
class PopulationEstimate:
    p_n: np.ndarray
    sigma_n: np.ndarray
    residual: float
    condition_number: float = float("nan")


@dataclass
class FluorescenceResult:
    counts: np.ndarray
    histogram: np.ndarray
    threshold: int
    p_hat: float
    stderr: float


def _coin_index(coin):
    if isinstance(coin, str):
        return {"H": H, "T": T}[coin.upper()]
    return int(coin)


def make_rng(seed, *stream):
    """Counter-based generator keyed by ``seed`` and an optional stream path."""
    key = np.random.SeedSequence([int(seed), *map(int, stream)]).generate_state(2, np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def branch_select(state, coin):
    """Motional component of ``state`` for one coin value and its weight.

    The vector is left unnormalised, like an ideal transfer of the other
    coin population out of the detection cycle.
    """
    v = np.array(np.asarray(state)[_coin_index(coin)], dtype=complex)
    return v, float(np.sum(np.abs(v) ** 2))


def displace_back(v, i, delta, check=True):
    """``D(-i * delta) v``: move position ``i`` back onto the origin."""
    if i == 0:
        return np.array(v, dtype=complex)
    d = hilbert.displacement_operator(-i * delta, hilbert.n_max_of(v), check=check)
    out = d @ v
    if check:
        hilbert.check_truncation(out, f"displace_back(i={i})")
    return out


def _populations(p):
    if isinstance(p, PopulationEstimate):
        return np.asarray(p.p_n, dtype=float)
    p = np.asarray(p)
    if np.iscomplexobj(p):
        return np.abs(p) ** 2
    return p.astype(float)


def sideband_frequencies(n_levels, eta, omega):
    return omega * relative_bsb_rabi(eta, n_levels)


def flop_basis(times, n_levels, eta, omega, decay_rate=0.0):
    """Columns ``(1 + cos(Omega_{n,n+1} t) exp(-decay (n+1)^0.7 t)) / 2``."""
    t = np.asarray(times, dtype=float)[:, None]
    n = np.arange(n_levels)[None, :]
    w = sideband_frequencies(n_levels, eta, omega)[None, :]
    return 0.5 * (1.0 + np.cos(w * t) * np.exp(-decay_rate * (n + 1.0) ** 0.7 * t))


def simulate_bsb_flopping(p_n, times, eta=DEFAULT_ETA, omega=DEFAULT_OMEGA, decay_rate=0.0,
                          shots_per_point=0, seed=0):
    """Probability to remain in ``T`` while driving ``|T,n> <-> |H,n+1>``.

    Parameters
    ----------
    p_n : array or PopulationEstimate
        Fock populations, or complex amplitudes whose squared moduli are
        used.  They are normalised to unit sum.
    times : array
        Pulse durations in seconds.
    shots_per_point : int
        If positive, a binomial count of bright shots is drawn per time.
    """
    p = _populations(p_n)
    total = p.sum()
    if total <= 0:
        raise ValueError("populations carry no weight")
    p = p / total
    times = np.asarray(times, dtype=float)
    if np.any(times < 0):
        raise ValueError("times must be nonnegative")
    p_t = np.clip(flop_basis(times, p.size, eta, omega, decay_rate) @ p, 0.0, 1.0)
    counts = None
    if shots_per_point > 0:
        counts = make_rng(seed).binomial(shots_per_point, p_t)
    return FlopTrace(times, p_t, counts, int(shots_per_point))


def default_times(n_points=100, duration=50e-6):
    return np.linspace(0.0, duration, n_points)


def _fit(basis, y, method):
    if method == "nnls":
        p, rnorm = nnls(basis, y, maxiter=50 * basis.shape[1])
        return p, float(rnorm)
    if method == "dft":
        # project the oscillating part on each known frequency with a Hann window
        w = np.hanning(len(y) + 2)[1:-1]
        osc = 2.0 * basis - 1.0
        num = (w * (2.0 * y - 1.0)) @ osc
        den = np.einsum("k,kn,kn->n", w, osc, osc)
        p = np.clip(num / den, 0.0, None)
        return p, float(np.linalg.norm(basis @ p - y))
    raise ValueError(f"unknown method {method!r}")


def extract_populations(trace, n_fit_max=10, eta=DEFAULT_ETA, omega=DEFAULT_OMEGA,
                        decay_rate=0.0, method="nnls", cond_limit=1e12, seed=0,
                        bootstrap=BOOTSTRAP_SAMPLES):
    """Fock populations ``p_0 .. p_{n_fit_max}`` from a flopping trace.

    ``method="nnls"`` fits the known-frequency cosine basis under a
    nonnegativity constraint; ``method="dft"`` is a windowed projection on
    the same frequencies, which leaks between the incommensurate components.
    With shot-noise counts present, ``sigma_n`` comes from a parametric
    bootstrap of ``bootstrap`` binomial resamples.

    Raises
    ------
    IllConditionedError
        When the trace cannot separate the frequencies, reported with the
        condition number of the basis.
    """
    n_levels = n_fit_max + 1
    basis = flop_basis(trace.times, n_levels, eta, omega, decay_rate)
    cond = float(np.linalg.cond(basis))
    if not np.isfinite(cond) or cond > cond_limit:
        raise IllConditionedError(
            f"flop basis is ill-conditioned (condition number {cond:.3e} > {cond_limit:.0e}); "
            "lengthen the trace or sample more densely")
    y = trace.measured
    p, rnorm = _fit(basis, y, method)
    sigma = np.zeros(n_levels)
    if trace.shots_per_point > 0 and bootstrap > 0:
        rng = make_rng(seed, 1)
        shots = trace.shots_per_point
        draws = np.empty((bootstrap, n_levels))
        for b in range(bootstrap):
            yb = rng.binomial(shots, np.clip(y, 0.0, 1.0)) / shots
            draws[b] = _fit(basis, yb, method)[0]
        sigma = draws.std(axis=0, ddof=1)
    return PopulationEstimate(p, sigma, rnorm, cond)


def naive_projection(state, coin, delta, grid):
    """``|<i delta|psi_coin>|^2`` per grid point, summed over the chosen coins."""
    state = np.asarray(state)
    n_max = hilbert.n_max_of(state)
    coins = (H, T) if coin is None else (_coin_index(coin),)
    out = {}
    for i in grid:
        ket = hilbert.coherent_state(i * delta, n_max, check=False)
        out[int(i)] = float(sum(abs(np.vdot(ket, state[c])) ** 2 for c in coins))
    return out


def _measured_populations(w, populations, n_fit, readout):
    if populations == "exact":
        return np.abs(w[:n_fit + 1]) ** 2
    if populations == "flop":
        weight = float(np.sum(np.abs(w) ** 2))
        if weight < 1e-14:
            return np.zeros(n_fit + 1)
        eta = readout.get("eta", DEFAULT_ETA)
        omega = readout.get("omega", DEFAULT_OMEGA)
        times = readout.get("times")
        times = default_times() if times is None else times
        trace = simulate_bsb_flopping(w, times, eta, omega,
                                      shots_per_point=readout.get("shots", 0),
                                      seed=readout.get("seed", 0))
        est = extract_populations(trace, n_fit, eta, omega,
                                  bootstrap=0 if not readout.get("shots") else BOOTSTRAP_SAMPLES)
        return weight * est.p_n
    raise ValueError(f"unknown populations mode {populations!r}")


def position_distribution(state, coin, delta, grid, estimator="fit", populations="exact",
                          n_fit_max=None, **readout):
    """Position weights ``P_i`` of a joint state on the grid ``i * delta``.

    The default ``"fit"`` estimator mimics the experiment: for each grid
    point the selected coin branch is displaced back by ``i`` steps and its
    Fock populations are recorded (exactly, or through simulated flopping
    and extraction with ``populations="flop"``).  All records are then
    fitted jointly, by nonnegative least squares, to an incoherent mixture of
    coherent states on the grid, whose displaced populations are Poisson.
    ``estimator="projector"`` returns the naive overlaps instead.

    ``coin`` is ``"H"``, ``"T"`` or None for the sum over both branches.
    """
    grid = [int(i) for i in grid]
    if estimator == "projector":
        return naive_projection(state, coin, delta, grid)
    if estimator != "fit":
        raise ValueError(f"unknown estimator {estimator!r}")
    state = np.asarray(state)
    n_max = hilbert.n_max_of(state)
    if n_fit_max is None:
        n_fit_max = n_max if populations == "exact" else 10
    n = np.arange(n_fit_max + 1)
    gi = np.array(grid)
    # model[(i, n), j] = Poisson(n; |(j - i) delta|^2)
    blocks = [poisson.pmf(n[:, None], (np.abs((gi[None, :] - i) * delta)) ** 2) for i in grid]
    model = np.vstack(blocks)
    coins = (H, T) if coin is None else (_coin_index(coin),)
    total = np.zeros(len(grid))
    for c in coins:
        v, weight = branch_select(state, c)
        if weight < 1e-14:
            continue
        data = np.concatenate([
            _measured_populations(displace_back(v, i, delta, check=False), populations,
                                  n_fit_max, readout)
            for i in grid])
        try:
            w, _ = nnls(model, data, maxiter=50 * len(grid))
        except RuntimeError as exc:
            raise EstimatorError(f"position fit failed for coin {c}: {exc}") from None
        total += w
    return {i: float(x) for i, x in zip(grid, total)}


def _valley_threshold(counts, dark_mean, bright_mean):
    hist = np.bincount(counts, minlength=int(np.ceil(bright_mean)) + 2)
    # Poisson crossover between the two expected count distributions
    c = np.arange(hist.size)
    cross = np.argmax(poisson.pmf(c, bright_mean) >= poisson.pmf(c, max(dark_mean, 1e-12)))
    lo = int(np.argmax(hist[:max(1, cross)]))
    hi = cross + int(np.argmax(hist[cross:])) if hist[cross:].any() else int(np.ceil(bright_mean))
    if hi <= lo + 1:
        return max(int(cross), 1), hist
    seg = hist[lo + 1:hi + 1].astype(float)
    cands = np.nonzero(seg == seg.min())[0] + lo + 1
    thr = int(cands[np.argmin(np.abs(cands - cross))])
    return thr, hist


def simulate_fluorescence(p_t, shots, window=DEFAULT_WINDOW, bright_rate=DEFAULT_BRIGHT_RATE,
                          dark_rate=DEFAULT_DARK_RATE, seed=0):
    """Photon counts of ``shots`` repetitions and the thresholded estimate of ``P_T``.

    Each shot is bright with probability ``p_t``; counts are Poisson with
    mean ``rate * window``.  Shots at or above the histogram valley are
    classified bright.
    """
    if bright_rate < 0 or dark_rate < 0:
        raise ValueError("rates must be nonnegative")
    if not 0.0 <= p_t <= 1.0:
        raise ValueError("p_t must lie in [0, 1]")
    rng = make_rng(seed)
    bright = rng.random(shots) < p_t
    mean = np.where(bright, bright_rate + dark_rate, dark_rate) * window
    counts = rng.poisson(mean)
    thr, hist = _valley_threshold(counts, dark_rate * window, (bright_rate + dark_rate) * window)
    p_hat = float(np.mean(counts >= thr)) if shots else float("nan")
    stderr = float(np.sqrt(p_hat * (1 - p_hat) / shots)) if shots else float("nan")
    return FluorescenceResult(counts, hist, thr, p_hat, stderr)

"""The echo step sequence, its calibration and the walks built from it."""

import threading
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy.optimize import brentq

from .. import hilbert
from ..coin import COIN_TOSS, PI_PULSE, apply_coin, coin_probabilities
from ..hilbert import H, T, TruncationError
from ..walk import WalkReport, _position_report
from .drive import DriveParams, evolve


class CalibrationError(RuntimeError):
    pass


def step_start_times(n_steps, p):
    return [k * p.duration_scale * p.t_d for k in range(n_steps)]


def _pulse_ref(t, p):
    return t if p.phase_reference == "pulse" else 0.0


def _coin_phase(phi):
    return np.array([[np.exp(-0.5j * phi), 0], [0, np.exp(0.5j * phi)]])


def experimental_step(state, p, t_start=0.0, coin_phase_error=0.0, check=True):
    """One physical step: drive, pi-pulse, drive, pi-pulse.

    Each drive pulse lasts ``duration_scale * t_d / 2``.  The pi-pulses are
    instantaneous ``R(pi, 0)`` rotations; between them the two coin states
    swap roles, so the unequal forces ``A_T = force_ratio * A_H`` add up to
    the same step length for both branches.

    ``coin_phase_error`` is a coin phase (radians) accumulated during each
    drive pulse, a static field offset within one shot.  The echo cancels it
    when both pulses have equal length.
    """
    half = 0.5 * p.duration_scale * p.t_d
    t_mid = t_start + half
    state = evolve(state, t_start, t_mid, p, _pulse_ref(t_start, p))
    if coin_phase_error:
        state = apply_coin(state, _coin_phase(coin_phase_error))
    state = apply_coin(state, PI_PULSE)
    state = evolve(state, t_mid, t_mid + half, p, _pulse_ref(t_mid, p))
    if coin_phase_error:
        state = apply_coin(state, _coin_phase(coin_phase_error))
    state = apply_coin(state, PI_PULSE)
    if check:
        hilbert.check_truncation(state, "experimental step")
    return state


def ground_state(p, coin=T):
    return hilbert.joint_state(coin, hilbert.fock_state(0, p.n_max))


def one_step_nbar(p):
    """``<n>`` after a coin toss and one step, starting from ``|T>|0>``."""
    state = apply_coin(ground_state(p), COIN_TOSS)
    return hilbert.number_expectation(experimental_step(state, p, check=False))


_calibration_cache = {}
_calibration_lock = threading.Lock()


def calibrate_step(p, target_nbar=None, xtol=1e-12, max_expand=6):
    """Find ``drive_amp_H`` so that one coin toss plus step yields ``target_nbar``.

    The root is bracketed starting from the Lamb-Dicke estimate and refined
    with Brent's method, which is deterministic, so equal inputs give
    bit-identical amplitudes.  Results are memoised per parameter set.

    Returns
    -------
    DriveParams
        Copy of ``p`` with ``drive_amp_H`` set and ``step_nbar = target_nbar``.

    Raises
    ------
    CalibrationError
        If no bracket is found, e.g. when the target lies beyond the maximum
        excitation the traveling-wave drive can reach.
    """
    target = p.step_nbar if target_nbar is None else float(target_nbar)
    if not target > 0:
        raise ValueError("target_nbar must be positive")
    base = p.with_(step_nbar=target, drive_amp_H=0.0, duration_scale=1.0)
    key = (base, xtol)
    with _calibration_lock:
        cached = _calibration_cache.get(key)
    if cached is None:
        a0 = base.ld_amplitude(np.sqrt(target))

        def excess(amp):
            return one_step_nbar(base.with_(drive_amp_H=amp)) - target

        lo, hi = 0.0, a0
        f_hi = excess(hi)
        expansions = 0
        while f_hi < 0:
            if expansions >= max_expand:
                raise CalibrationError(
                    f"no bracket for target <n>={target}: reached <n>={f_hi + target:.4f} "
                    f"at drive_amp_H={hi:.4e} rad/s")
            lo, hi = hi, 1.5 * hi
            f_hi = excess(hi)
            expansions += 1
        cached = brentq(excess, lo, hi, xtol=xtol * a0, rtol=4 * np.finfo(float).eps,
                        maxiter=200)
        with _calibration_lock:
            _calibration_cache[key] = cached
    return p.with_(drive_amp_H=cached, step_nbar=target)


def ideal_step(state, delta, n_max):
    """Exact conditional displacement ``T: +delta, H: -delta``."""
    return np.stack([hilbert.displacement_operator(-delta, n_max) @ state[H],
                     hilbert.displacement_operator(delta, n_max) @ state[T]])


def run_dynamics_walk(n_steps, p, initial=None, estimator="fit", readout_options=None,
                      coin=COIN_TOSS, seed=0, dephasing_samples=32):
    """Coin tosses alternating with physical echo steps.

    With ``p.coin_dephasing_rms > 0`` the result is averaged over
    ``dephasing_samples`` shots, each with a static coin phase drawn from a
    seeded normal distribution; the reported state is the last shot.

    The report's ``extra["history"]`` holds ``(P_H, P_T, <n>)`` after every
    step.
    """
    if p.coin_dephasing_rms > 0:
        return _dephased_walk(n_steps, p, initial, estimator, readout_options, coin, seed,
                              dephasing_samples)
    state, history = _walk_trajectory(n_steps, p, initial, coin, 0.0)
    report = WalkReport(coin_probabilities(state),
                        _position_report(state, p.step_size, n_steps, estimator,
                                         readout_options),
                        hilbert.number_expectation(state), n_steps, estimator,
                        {"history": history})
    return state, report


def _walk_trajectory(n_steps, p, initial, coin, phase_error):
    state = ground_state(p) if initial is None else np.asarray(initial, dtype=complex)
    history = []
    for k, t in enumerate(step_start_times(n_steps, p)):
        state = apply_coin(state, coin)
        try:
            state = experimental_step(state, p, t, phase_error)
        except TruncationError as exc:
            raise TruncationError(f"dynamics walk step {k + 1}: {exc}") from None
        history.append((*coin_probabilities(state), hilbert.number_expectation(state)))
    return state, history


def _dephased_walk(n_steps, p, initial, estimator, readout_options, coin, seed, samples):
    rng = np.random.Generator(np.random.Philox(seed))
    phases = rng.normal(0.0, p.coin_dephasing_rms, size=samples)
    hist = np.zeros((n_steps, 3))
    positions = {}
    state = None
    for phi in phases:
        state, history = _walk_trajectory(n_steps, p, initial, coin, phi)
        hist += np.array(history).reshape(n_steps, 3)
        for i, w in _position_report(state, p.step_size, n_steps, estimator,
                                     readout_options).items():
            positions[i] = positions.get(i, 0.0) + w / samples
    hist /= samples
    last = hist[-1] if n_steps else (*coin_probabilities(state), 0.0)
    report = WalkReport((float(last[0]), float(last[1])), positions, float(last[2]), n_steps,
                        estimator, {"history": [tuple(h) for h in hist],
                                    "dephasing_samples": samples})
    return state, report


def _map(fn, items, threads):
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def duration_sweep(rel_scales, p, n_steps=3, threads=1):
    """``[(scale, P_H(3), P_T(3)), ...]`` for each relative pulse duration."""

    def one(scale):
        _, rep = run_dynamics_walk(n_steps, p.with_(duration_scale=float(scale)),
                                   estimator="none")
        return float(scale), rep.p_h, rep.p_t

    return _map(one, list(rel_scales), threads)


def step_limit_study(p, max_steps, coin=COIN_TOSS, stop_below=None):
    """Per-step excitation, fidelity and squeezing of the physical walk.

    For each step ``k`` the walk state after the coin toss is propagated both
    by the physical step and by the ideal conditional displacement of size
    ``p.step_size``; their overlap gives the per-step fidelity.  Squeezing is
    tracked on the outermost path (always ``T``), which is a single wave
    packet; ``var_min``/``var_max`` are its extreme rotated-quadrature
    variances (0.5 for a coherent state).

    The study stops early, without raising, when the state reaches the top
    of the Fock space, or after the first step whose fidelity falls below
    ``stop_below``; the reason is stored under ``"stopped"``.
    """
    state = ground_state(p)
    edge = ground_state(p)
    rows = []
    stopped = None
    for k, t in enumerate(step_start_times(max_steps, p)):
        tossed = apply_coin(state, coin)
        try:
            physical = experimental_step(tossed, p, t)
            ideal = ideal_step(tossed, p.step_size, p.n_max)
            hilbert.check_truncation(ideal, "ideal step")
            edge = experimental_step(edge, p, t)
        except TruncationError as exc:
            stopped = f"step {k + 1}: {exc}"
            break
        state = physical
        v_min, v_max = hilbert.quadrature_variances(edge[T])
        rows.append({
            "step": k + 1,
            "n_bar": hilbert.number_expectation(state),
            "fidelity": hilbert.fidelity(ideal, physical),
            "var_min": v_min,
            "var_max": v_max,
            "P_H": coin_probabilities(state)[0],
        })
        if stop_below is not None and rows[-1]["fidelity"] < stop_below:
            stopped = f"step {k + 1}: fidelity {rows[-1]['fidelity']:.4f} < {stop_below}"
            break
    return {"rows": rows, "stopped": stopped}


__all__ = [
    "CalibrationError", "experimental_step", "calibrate_step", "one_step_nbar",
    "run_dynamics_walk", "duration_sweep", "step_limit_study", "ideal_step",
    "step_start_times", "ground_state", "DriveParams",
]

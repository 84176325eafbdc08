"""Batch runner: ``ionwalk <subcommand> [options]``.

Every subcommand writes CSV and/or JSON files into ``--out``.  Each file
starts with a provenance record (config hash, seed, version, wall clock):
a ``# provenance: {...}`` comment line for CSV and a ``"provenance"`` key for
JSON.  Apart from that record, outputs are a deterministic function of the
configuration and seed.

Failures print one JSON line on stderr and exit with a distinct code:

====  ==================================
2     bad command line (argparse)
3     unknown configuration key
4     invalid physics (eta <= 0, delta = 0, ...)
5     truncation failure
6     calibration or integration failure
====  ==================================
"""

import argparse
import csv
import datetime
import hashlib
import io
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__, hilbert, readout, walk
from .dynamics import (CalibrationError, DriveParams, IntegrationError, calibrate_step,
                       duration_sweep, run_dynamics_walk, sideband_rabi_curve,
                       step_limit_study)
from .hilbert import T, TruncationError

EXIT_UNKNOWN_KEY = 3
EXIT_PHYSICS = 4
EXIT_TRUNCATION = 5
EXIT_NUMERICS = 6

SUBCOMMANDS = ("walk", "phase-walk", "dynamics-walk", "sweep-duration", "positions",
               "rabi-curve", "limits", "readout-roundtrip", "impulsive")

DEFAULTS = {
    # physics, frequencies in Hz
    "omega_z_hz": 2.1e6,
    "delta_hz": 100e3,
    "eta": 0.31,
    "force_ratio": -1.5,
    "phase": -np.pi / 2,
    "dt_ns": None,
    "n_max": 128,
    "duration_scale": 1.0,
    "phase_reference": "pulse",
    "step_nbar": 1.33,
    "coin_dephasing_rms": 0.0,
    "omega_hz": 500e3,
    # experiment
    "steps": 3,
    "shots": 1000,
    "nbar0": 0.0,
    "samples": 200,
    "scales": [0.98, 0.99, 0.995, 1.0, 1.005, 1.01, 1.02],
    "max_steps": 6,
    "kick": float(np.sqrt(1.33)),
    "estimator": "fit",
    "n_fit_max": 10,
    "flop_points": 100,
    "flop_duration_us": 50.0,
    "roundtrip_cases": 50,
    "seed": 0,
    "threads": 1,
}


class ConfigError(ValueError):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def load_config(path=None, overrides=None):
    """Defaults, then the JSON document at ``path``, then ``overrides``."""
    cfg = dict(DEFAULTS)
    if path:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object", EXIT_UNKNOWN_KEY)
        unknown = sorted(set(doc) - set(DEFAULTS))
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(unknown)}", EXIT_UNKNOWN_KEY)
        cfg.update(doc)
    for k, v in (overrides or {}).items():
        if k not in DEFAULTS:
            raise ConfigError(f"unknown config key: {k}", EXIT_UNKNOWN_KEY)
        if v is not None:
            cfg[k] = v
    validate(cfg)
    return cfg


def validate(cfg):
    if not cfg["eta"] > 0:
        raise ConfigError(f"eta must be positive, got {cfg['eta']}", EXIT_PHYSICS)
    if cfg["delta_hz"] == 0:
        raise ConfigError("delta_hz must be nonzero", EXIT_PHYSICS)
    if not cfg["omega_z_hz"] > 0:
        raise ConfigError("omega_z_hz must be positive", EXIT_PHYSICS)
    if cfg["dt_ns"] is not None and not cfg["dt_ns"] > 0:
        raise ConfigError("dt_ns must be positive", EXIT_PHYSICS)
    if int(cfg["n_max"]) < 1 or int(cfg["steps"]) < 0:
        raise ConfigError("n_max must be >= 1 and steps >= 0", EXIT_PHYSICS)
    if cfg["nbar0"] < 0:
        raise ConfigError("nbar0 must be nonnegative", EXIT_PHYSICS)
    if cfg["phase_reference"] not in ("pulse", "continuous"):
        raise ConfigError(f"unknown phase_reference {cfg['phase_reference']!r}", EXIT_PHYSICS)


def drive_params(cfg):
    return DriveParams(
        omega_z=2 * np.pi * cfg["omega_z_hz"],
        delta=2 * np.pi * cfg["delta_hz"],
        eta=cfg["eta"],
        force_ratio=cfg["force_ratio"],
        phase=cfg["phase"],
        dt=None if cfg["dt_ns"] is None else cfg["dt_ns"] * 1e-9,
        n_max=int(cfg["n_max"]),
        duration_scale=cfg["duration_scale"],
        phase_reference=cfg["phase_reference"],
        step_nbar=cfg["step_nbar"],
        coin_dephasing_rms=cfg["coin_dephasing_rms"],
    )


def config_hash(cfg):
    """SHA-256 of the configuration; the thread count does not affect results
    and is left out."""
    cfg = {k: v for k, v in cfg.items() if k != "threads"}
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"), default=float)
    return hashlib.sha256(blob.encode()).hexdigest()


def provenance(cfg, command):
    return {
        "command": command,
        "config_hash": config_hash(cfg),
        "seed": int(cfg["seed"]),
        "version": __version__,
        "wall_clock": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }


def write_csv(path, header, rows, prov):
    buf = io.StringIO()
    buf.write("# provenance: " + json.dumps(prov, sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())


def write_json(path, payload, prov):
    doc = {"provenance": prov, **payload}
    with open(path, "w", encoding="utf-8", newline="") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, default=_jsonable)
        fh.write("\n")


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not serialisable: {type(x)}")


def thermal_weights(nbar0, samples, seed):
    """Histogram ``{n: count}`` of initial Fock states drawn from a thermal state."""
    if nbar0 == 0:
        return {0: samples}
    rng = readout.make_rng(seed, 7)
    draws = rng.geometric(1.0 / (1.0 + nbar0), size=samples) - 1
    values, counts = np.unique(draws, return_counts=True)
    return {int(n): int(c) for n, c in zip(values, counts)}


def thermal_ensemble(run, nbar0, samples, seed, threads=1):
    """Average ``run(n) -> WalkReport`` over thermally distributed initial ``|n>``.

    Identical draws are run once and weighted by their multiplicity, and
    results are merged in order of ``n``, so the average does not depend on
    the thread count.  ``nbar0 = 0`` returns the pure-state report itself.
    """
    if nbar0 == 0:
        rep = run(0)
        rep.extra.update({"nbar0": 0.0, "samples": samples, "initial_n_mean": 0.0})
        return rep
    weights = thermal_weights(nbar0, samples, seed)
    ns = sorted(weights)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            reports = list(pool.map(run, ns))
    else:
        reports = [run(n) for n in ns]
    total = float(samples)
    p_h = sum(weights[n] * r.p_h for n, r in zip(ns, reports)) / total
    p_t = sum(weights[n] * r.p_t for n, r in zip(ns, reports)) / total
    n_bar = sum(weights[n] * r.n_bar for n, r in zip(ns, reports)) / total
    positions = {}
    for n, r in zip(ns, reports):
        for i, w in r.position_probs.items():
            positions[i] = positions.get(i, 0.0) + weights[n] * w / total
    mean_n = sum(n * c for n, c in weights.items()) / total
    return walk.WalkReport((p_h, p_t), positions, n_bar, reports[0].step_count,
                           reports[0].estimator,
                           {"nbar0": nbar0, "samples": samples, "initial_n_mean": mean_n})


def _fock_initial(n, n_max):
    return hilbert.joint_state(T, hilbert.fock_state(n, n_max))


def _calibrated(cfg):
    return calibrate_step(drive_params(cfg), cfg["step_nbar"])


def _position_rows(step, report, estimator):
    return [(step, i, "both", estimator, w) for i, w in sorted(report.position_probs.items())]


def cmd_walk(cfg, out, prov):
    n = int(cfg["steps"])
    quantum = walk.line_walk(n).position_probs(tol=0.0)
    classical = walk.classical_walk(n)
    positions = range(-n, n + 1)
    rows = [(i, quantum.get(i, 0.0), classical.get(i, 0.0)) for i in positions]
    write_csv(os.path.join(out, "walk.csv"),
              ["position", "quantum_prob", "classical_prob"], rows, prov)
    state = walk.line_walk(n)
    p_h, p_t = state.coin_probs()
    write_json(os.path.join(out, "report.json"), {
        "P_H": p_h, "P_T": p_t,
        "quantum_spread": walk.spread_statistics(quantum),
        "classical_spread": walk.spread_statistics(classical),
    }, prov)


def cmd_phase_walk(cfg, out, prov):
    n_max, steps = int(cfg["n_max"]), int(cfg["steps"])
    delta = float(np.sqrt(cfg["step_nbar"]))

    def run(n0):
        return walk.run_phase_walk(steps, delta, n_max, _fock_initial(n0, n_max),
                                   estimator=cfg["estimator"])[1]

    rep = thermal_ensemble(run, cfg["nbar0"], int(cfg["samples"]), cfg["seed"],
                           int(cfg["threads"]))
    write_csv(os.path.join(out, "positions.csv"), ["step", "i", "coin", "estimator", "probability"],
              _position_rows(steps, rep, cfg["estimator"]), prov)
    write_json(os.path.join(out, "report.json"), rep.to_dict(), prov)


def cmd_dynamics_walk(cfg, out, prov):
    p = _calibrated(cfg)
    steps = int(cfg["steps"])

    def run(n0):
        return run_dynamics_walk(steps, p, _fock_initial(n0, p.n_max), estimator=cfg["estimator"],
                                 seed=cfg["seed"])[1]

    rep = thermal_ensemble(run, cfg["nbar0"], int(cfg["samples"]), cfg["seed"],
                           int(cfg["threads"]))
    write_csv(os.path.join(out, "positions.csv"), ["step", "i", "coin", "estimator", "probability"],
              _position_rows(steps, rep, cfg["estimator"]), prov)
    write_json(os.path.join(out, "report.json"),
               {**rep.to_dict(), "drive_amp_H_hz": p.drive_amp_H / (2 * np.pi)}, prov)


def cmd_sweep(cfg, out, prov):
    p = _calibrated(cfg)
    rows = duration_sweep(cfg["scales"], p, int(cfg["steps"]), int(cfg["threads"]))
    write_csv(os.path.join(out, "sweep.csv"), ["scale", "P_H", "P_T"], rows, prov)


def cmd_positions(cfg, out, prov):
    steps, n_max = int(cfg["steps"]), int(cfg["n_max"])
    delta = float(np.sqrt(cfg["step_nbar"]))
    state, _ = walk.run_phase_walk(steps, delta, n_max, estimator="none")
    grid = range(-steps, steps + 1)
    rows = []
    for estimator in ("fit", "projector"):
        for coin in ("H", "T", None):
            dist = readout.position_distribution(state, coin, delta, grid, estimator=estimator)
            rows += [(steps, i, coin or "both", estimator, w) for i, w in sorted(dist.items())]
    write_csv(os.path.join(out, "positions.csv"), ["step", "i", "coin", "estimator", "probability"],
              rows, prov)


def cmd_rabi(cfg, out, prov):
    curve = sideband_rabi_curve(cfg["eta"], 2 * np.pi * cfg["omega_hz"], int(cfg["n_max"]))
    rows = [(int(n), e / (2 * np.pi), l / (2 * np.pi))
            for n, e, l in zip(curve.n, curve.exact, curve.ld)]
    write_csv(os.path.join(out, "rabi.csv"), ["n", "omega_exact", "omega_ld"], rows, prov)
    write_json(os.path.join(out, "rabi.json"),
               {"eta": cfg["eta"], "peak_n": curve.peak_n, "zero_n": curve.zero_n}, prov)


def cmd_limits(cfg, out, prov):
    p = _calibrated(cfg)
    study = step_limit_study(p, int(cfg["max_steps"]))
    rows = [(r["step"], r["n_bar"], r["fidelity"], r["var_min"], r["var_max"])
            for r in study["rows"]]
    write_csv(os.path.join(out, "limits.csv"),
              ["step", "n_bar", "fidelity", "var_min", "var_max"], rows, prov)
    write_json(os.path.join(out, "report.json"), study, prov)


def cmd_roundtrip(cfg, out, prov):
    eta, omega = cfg["eta"], 2 * np.pi * cfg["omega_hz"]
    times = readout.default_times(int(cfg["flop_points"]), cfg["flop_duration_us"] * 1e-6)
    n_fit, shots, seed = int(cfg["n_fit_max"]), int(cfg["shots"]), int(cfg["seed"])
    rng = readout.make_rng(seed, 3)
    errors = []
    for _ in range(int(cfg["roundtrip_cases"])):
        p = rng.dirichlet(np.ones(n_fit + 1))
        trace = readout.simulate_bsb_flopping(p, times, eta, omega)
        est = readout.extract_populations(trace, n_fit, eta, omega)
        errors.append(float(np.abs(est.p_n - p).sum()))
    coherent = np.abs(hilbert.coherent_state(np.sqrt(cfg["step_nbar"]), 64, check=False)) ** 2
    trace = readout.simulate_bsb_flopping(coherent, times, eta, omega, shots_per_point=shots,
                                          seed=seed)
    est = readout.extract_populations(trace, n_fit, eta, omega, seed=seed)
    noisy_l1 = float(np.abs(est.p_n - coherent[:n_fit + 1]).sum() + coherent[n_fit + 1:].sum())
    rows = [(t * 1e6, pt, c) for t, pt, c in zip(trace.times, trace.p_t, trace.counts)]
    write_csv(os.path.join(out, "flop.csv"), ["t_us", "p_ideal", "counts"], rows, prov)
    write_json(os.path.join(out, "report.json"), {
        "noiseless_l1_max": max(errors), "noisy_l1": noisy_l1, "p_n": est.p_n,
        "sigma_n": est.sigma_n, "condition_number": est.condition_number,
    }, prov)


def cmd_impulsive(cfg, out, prov):
    steps = int(cfg["steps"])
    state, rep = walk.impulsive_walk(steps, cfg["kick"])
    classical = walk.classical_walk(steps)
    rows = [(i, rep.position_probs.get(i, 0.0), classical.get(i, 0.0))
            for i in range(-steps, steps + 1)]
    write_csv(os.path.join(out, "impulsive.csv"),
              ["position", "quantum_prob", "classical_prob"], rows, prov)
    write_json(os.path.join(out, "report.json"), {
        **rep.to_dict(),
        "quantum_spread": walk.spread_statistics(rep.position_probs),
        "classical_spread": walk.spread_statistics(classical),
    }, prov)


COMMANDS = {
    "walk": cmd_walk,
    "phase-walk": cmd_phase_walk,
    "dynamics-walk": cmd_dynamics_walk,
    "sweep-duration": cmd_sweep,
    "positions": cmd_positions,
    "rabi-curve": cmd_rabi,
    "limits": cmd_limits,
    "readout-roundtrip": cmd_roundtrip,
    "impulsive": cmd_impulsive,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON configuration file")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--threads", type=int)
    common.add_argument("--eta", type=float)
    common.add_argument("--delta-hz", type=float)
    common.add_argument("--steps", type=int)
    common.add_argument("--nmax", type=int)
    common.add_argument("--dt-ns", type=float)
    common.add_argument("--duration-scale", type=float)
    common.add_argument("--shots", type=int)
    common.add_argument("--nbar0", type=float)
    common.add_argument("--samples", type=int)
    common.add_argument("--max-steps", type=int)
    parser = argparse.ArgumentParser(prog="ionwalk", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def _overrides(args):
    return {
        "seed": args.seed, "threads": args.threads, "eta": args.eta,
        "delta_hz": args.delta_hz, "steps": args.steps, "n_max": args.nmax,
        "dt_ns": args.dt_ns, "duration_scale": args.duration_scale, "shots": args.shots,
        "nbar0": args.nbar0, "samples": args.samples, "max_steps": args.max_steps,
    }


def _fail(kind, code, message):
    sys.stderr.write(json.dumps({"error": kind, "code": code, "message": str(message)}) + "\n")
    return code


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, _overrides(args))
        os.makedirs(args.out, exist_ok=True)
        COMMANDS[args.command](cfg, args.out, provenance(cfg, args.command))
    except ConfigError as exc:
        kind = "unknown_key" if exc.code == EXIT_UNKNOWN_KEY else "invalid_physics"
        return _fail(kind, exc.code, exc)
    except TruncationError as exc:
        return _fail("truncation", EXIT_TRUNCATION, exc)
    except (CalibrationError, IntegrationError) as exc:
        return _fail("numerics", EXIT_NUMERICS, exc)
    except ValueError as exc:
        return _fail("invalid_physics", EXIT_PHYSICS, exc)
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""
How far does it scale?
======================

The traveling-wave drive is not a pure displacement beyond the Lamb-Dicke
regime; the per-step fidelity decays as the walker climbs the Fock ladder.
Short, intense kicks avoid this and the walk can run for a hundred steps.
"""

# %%
from ionwalk.dynamics import DriveParams, calibrate_step, step_limit_study
from ionwalk.walk import DEFAULT_STEP, classical_walk, impulsive_walk, spread_statistics

for eta, n_max, steps in ((0.31, 128, 4), (0.1, 400, 8)):
    p = calibrate_step(DriveParams(eta=eta, n_max=n_max), 1.33)
    study = step_limit_study(p, steps)
    print(f"eta = {eta}")
    for r in study["rows"]:
        print(f"  step {r['step']:2d}  <n>={r['n_bar']:7.3f}  F={r['fidelity']:.4f}  "
              f"var_min={r['var_min']:.3f}")

# %%
# about a minute: n_max reaches ~14000 for a hundred steps
_, rep = impulsive_walk(100, DEFAULT_STEP)
_, _, sq = spread_statistics(rep.position_probs)
_, _, sc = spread_statistics(classical_walk(100))
print(f"N=100 norm drift {rep.extra['norm_drift']:.1e}, sigma ratio {sq / sc:.2f}")

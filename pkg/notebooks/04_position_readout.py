"""
Reading out positions
=====================

Fock populations come from blue-sideband flopping; the position weights come
from displacing each grid point back to the origin and fitting the
recorded populations with an incoherent mixture of coherent states.
"""

# %%
import numpy as np

from ionwalk import hilbert, readout
from ionwalk.dynamics import sideband_rabi_curve
from ionwalk.walk import DEFAULT_STEP, run_phase_walk

curve = sideband_rabi_curve(0.31, 1.0, 60)
print("coupling peaks at n =", curve.peak_n, "and first vanishes at n =", curve.zero_n)

# %%
p = np.abs(hilbert.coherent_state(DEFAULT_STEP, 64)) ** 2
trace = readout.simulate_bsb_flopping(p, readout.default_times(), shots_per_point=1000, seed=1)
est = readout.extract_populations(trace, 10, seed=1)
for n in range(6):
    print(f"n={n}  true={p[n]:.4f}  fit={est.p_n[n]:.4f} +- {est.sigma_n[n]:.4f}")
print("condition number", f"{est.condition_number:.2e}")

# %%
state, _ = run_phase_walk(3, DEFAULT_STEP, estimator="none")
grid = range(-3, 4)
for name in ("fit", "projector"):
    dist = readout.position_distribution(state, None, DEFAULT_STEP, grid, estimator=name)
    print(f"{name:9s}", " ".join(f"{i:+d}:{w:.3f}" for i, w in dist.items()))

# %%
# Coin readout by fluorescence: 60000 repetitions, threshold at the valley.
res = readout.simulate_fluorescence(0.741, 60000, seed=4)
print(f"threshold {res.threshold} counts, P_T = {res.p_hat:.4f} +- {res.stderr:.4f}")

"""
One physical step
=================

The walk step is a spin-dependent optical dipole force, switched on for half
a rephasing period, an echo pi-pulse, a second half drive and a final
pi-pulse.  Here the drive amplitude is calibrated and the step is compared
with an exact conditional displacement.
"""

# %%
import time

import numpy as np

from ionwalk import hilbert
from ionwalk.coin import COIN_TOSS, apply_coin
from ionwalk.dynamics import (DriveParams, calibrate_step, experimental_step, ground_state,
                              ideal_step, run_dynamics_walk)

p = DriveParams()
print(f"omega_z = 2pi x {p.omega_z / 2 / np.pi / 1e6:.2f} MHz, delta = 2pi x "
      f"{p.delta / 2 / np.pi / 1e3:.0f} kHz, t_d = {p.t_d * 1e6:.1f} us, eta = {p.eta}")

t0 = time.perf_counter()
p = calibrate_step(p, 1.33)
print(f"calibrated A_H = 2pi x {p.drive_amp_H / 2 / np.pi / 1e3:.2f} kHz "
      f"({p.drive_amp_H / p.ld_amplitude():.4f} x the Lamb-Dicke estimate), "
      f"{time.perf_counter() - t0:.1f} s")

# %%
state = apply_coin(ground_state(p), COIN_TOSS)
phys = experimental_step(state, p)
ideal = ideal_step(state, p.step_size, p.n_max)
print("single-step fidelity", hilbert.fidelity(ideal, phys))
print("quadrature variances of the T branch", hilbert.quadrature_variances(phys[1]))

# %%
_, rep = run_dynamics_walk(3, p, estimator="none")
for k, (p_h, p_t, nbar) in enumerate(rep.extra["history"], start=1):
    print(f"step {k}: P_H={p_h:.4f}  <n>={nbar:.3f}")

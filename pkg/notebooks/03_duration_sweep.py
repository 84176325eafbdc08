"""
Sensitivity to the pulse duration
=================================

Stretching every drive pulse by a relative amount moves the echo off the
rephasing point, so the two coin branches no longer close their loops and
the interference that lowers P_H(3) washes out.
"""

# %%
from ionwalk.dynamics import DriveParams, calibrate_step, duration_sweep

p = calibrate_step(DriveParams(), 1.33)
scales = [0.98, 0.99, 0.995, 0.998, 1.0, 1.002, 1.005, 1.01, 1.02]
for scale, p_h, p_t in duration_sweep(scales, p, threads=3):
    print(f"{scale:6.3f}  P_H(3) = {p_h:.3f}  " + "#" * int(60 * p_h))

# %%
# With one phase-continuous beat note the washout is far weaker: the drive
# phase then does not restart with each pulse.
q = calibrate_step(DriveParams(phase_reference="continuous"), 1.33)
for scale, p_h, _ in duration_sweep([0.98, 1.0, 1.02], q):
    print(f"continuous {scale:5.2f}  P_H(3) = {p_h:.3f}")

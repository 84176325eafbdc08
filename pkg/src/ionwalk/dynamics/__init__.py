"""Spin-dependent-force dynamics beyond the Lamb-Dicke regime."""

from .drive import (DriveParams, IntegrationError, drive_hamiltonian, evolve,
                    exp_i_eta_x, quadrature_eigensystem)
from .protocol import (CalibrationError, calibrate_step, duration_sweep, experimental_step,
                       ground_state, ideal_step, one_step_nbar, run_dynamics_walk, step_limit_study)
from .rabi import RabiCurve, laguerre_range, relative_bsb_rabi, sideband_rabi_curve

__all__ = [
    "DriveParams", "IntegrationError", "drive_hamiltonian", "evolve", "exp_i_eta_x",
    "quadrature_eigensystem", "CalibrationError", "calibrate_step", "duration_sweep",
    "experimental_step", "ground_state", "ideal_step", "one_step_nbar", "run_dynamics_walk",
    "step_limit_study", "RabiCurve", "laguerre_range", "relative_bsb_rabi",
    "sideband_rabi_curve",
]

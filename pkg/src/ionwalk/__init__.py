"""Discrete quantum walk of a trapped ion in phase space.

Three fidelity tiers are available: the exact walk on the integer line
(:func:`ionwalk.walk.line_walk`), the walk of coherent states under exact
displacements (:func:`ionwalk.walk.run_phase_walk`), and the full
spin-dependent-force dynamics (:mod:`ionwalk.dynamics`).  :mod:`ionwalk.readout`
emulates the measurement chain.
"""

from . import coin, hilbert, readout, walk
from .coin import COIN_TOSS, PI_PULSE, apply_coin, coin_probabilities, rotation
from .hilbert import (H, T, TruncationError, coherent_state, displacement_operator, fidelity,
                      number_expectation, overlap)
from .walk import (DEFAULT_STEP, LineWalkState, WalkReport, classical_walk,
                   conditional_step_operator, impulsive_walk, line_walk, run_phase_walk,
                   spread_statistics)

__version__ = "0.1.0"

"""SU(2) coin rotations acting on the internal qubit of the walker."""

import numpy as np


def rotation(theta, phi):
    """Rotation ``R(theta, phi)`` in the (H, T) basis.

    ``theta`` is the pulse area and ``phi`` the rf phase, both in radians.
    """
    c = np.cos(theta / 2)
    s = np.sin(theta / 2)
    return np.array([[c, -1j * np.exp(-1j * phi) * s],
                     [-1j * np.exp(1j * phi) * s, c]], dtype=complex)


# coin toss used by every walk protocol, and the population-exchange pulse
COIN_TOSS = rotation(np.pi / 2, -np.pi / 2)
PI_PULSE = rotation(np.pi, 0.0)


def apply_coin(state, c):
    """Apply ``c`` (x) identity to a joint state of shape ``(2, n_max + 1)``."""
    return np.asarray(c) @ np.asarray(state)


def coin_probabilities(state):
    """``(P_H, P_T)`` of a joint state."""
    p = np.sum(np.abs(np.asarray(state)) ** 2, axis=-1)
    return float(p[0]), float(p[1])

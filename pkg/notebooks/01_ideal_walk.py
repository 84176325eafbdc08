"""
A coined walk, three ways
=========================

The same three-step walk on the integer line, with coherent states as
positions, and with instantaneous kicks.
"""

# %%
import numpy as np

from ionwalk import walk

# the line walk starts in |T> at the origin; T steps right, H steps left
state = walk.line_walk(3)
print("P_H, P_T =", state.coin_probs())
print("quantum  ", state.position_probs())
print("classical", walk.classical_walk(3))

# %%
# Amplitudes keep their signs, which is where the interference comes from.
for (coin, i), a in sorted(state.entries(1e-12).items()):
    print("HT"[coin], i, np.round(a, 4))

# %%
# Coherent states |i * delta> replace the sites.  Neighbours overlap by
# exp(-delta^2 / 2) ~ 0.51, so the coin probabilities shift slightly.
delta = walk.DEFAULT_STEP
for n in range(1, 5):
    _, rep = walk.run_phase_walk(n, delta, estimator="none")
    line = walk.line_walk(n).coin_probs()
    print(f"N={n}  phase-space P_H={rep.p_h:.5f}  line P_H={line[0]:.5f}  <n>={rep.n_bar:.3f}")

# %%
# The grid decomposition recovers the line distribution exactly.
_, rep = walk.run_phase_walk(3, delta, estimator="grid")
print({i: round(p, 6) for i, p in rep.position_probs.items()})

# %%
# Spreading: the quantum walk is ballistic, the classical one diffusive.
for n in (10, 50, 100, 200):
    _, _, sq = walk.spread_statistics(walk.line_walk(n).position_probs())
    _, _, sc = walk.spread_statistics(walk.classical_walk(n))
    print(f"N={n:4d}  sigma_q={sq:7.2f}  sigma_c={sc:6.2f}  ratio={sq / sc:.2f}")

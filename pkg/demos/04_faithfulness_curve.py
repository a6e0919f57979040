# %% [markdown]
# # How many interaction orders does a game need?
#
# FSII of order k is the best k-additive fit of a game under the Shapley
# kernel. The weighted R² of that fit, as a function of k, tells how much of
# the game lives in low-order interactions.

# %%
import numpy as np

from hpi_games import GameSpec, GameValues, binary_space, moebius_strata, moebius_transform, play, r2_curve
from hpi_games import random_k_additive_oracle

n = 7
for k_star in (1, 2, 3):
    oracle = random_k_additive_oracle(binary_space(n), k_star, k_star)
    g = play(GameSpec("ablation", oracle.space, target=(1,) * n), oracle)
    curve = r2_curve(g)
    print(f"k*={k_star}: R² =", " ".join(f"{r:.4f}" for _, _, r in curve))

# %% [markdown]
# A random game with no structure needs all orders:

# %%
g = GameValues(np.random.default_rng(0).normal(size=1 << n))
print("random:", " ".join(f"{r:.4f}" for _, _, r in r2_curve(g)))

# %% [markdown]
# The Möbius strata show the same picture: magnitude per interaction order.

# %%
oracle = random_k_additive_oracle(binary_space(n), 2, 5)
g = play(GameSpec("ablation", oracle.space, target=(1,) * n), oracle)
for s in moebius_strata(moebius_transform(g)):
    print(f"order {s.order}: max |m| = {s.max:.3g}, mean |m| = {s.mean:.3g}")

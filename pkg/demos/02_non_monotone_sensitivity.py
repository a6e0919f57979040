# %% [markdown]
# # Sensitivity is not monotone
#
# Two binary hyperparameters and a performance that is 1 only at `(0, 0)`.
# Randomizing one hyperparameter gives variance 1/4, randomizing both only
# 3/16: adding a player can *lower* the value. Tunability, in contrast, is
# always monotone.

# %%
from hpi_games import (ConfigSpace, Discrete, GameSpec, is_monotone, moebius_transform,
                       monotonicity_violations, play, product_indicator_oracle, shapley_values)

space = ConfigSpace((("lambda1", Discrete((0, 1))), ("lambda2", Discrete((0, 1)))), (0, 0))
oracle = product_indicator_oracle(space, (0, 0))

sens = play(GameSpec("sensitivity", space), oracle)
print("sensitivity game", sens.values)
for small, big in monotonicity_violations(sens):
    print(f"  v({set(small.names(space.names))}) = {sens[small]:.4f} > v({set(big.names(space.names))}) = {sens[big]:.4f}")

# %% [markdown]
# The negative pair interaction `3/16 - 1/4 - 1/4 = -5/16` is what breaks
# monotonicity; it is split equally between the players.

# %%
print("Möbius", moebius_transform(sens).dense())
print("Shapley", shapley_values(sens).first_order())

# %%
tun = play(GameSpec("tunability", space, baseline=(1, 1)), oracle)
print("tunability from (1, 1)", tun.values, "monotone:", is_monotone(tun))

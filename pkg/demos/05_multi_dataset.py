# %% [markdown]
# # Games across several datasets
#
# The same space evaluated on several datasets gives one game per dataset.
# Aggregating coalition-wise by the mean (or a lower quantile for a
# pessimistic view) yields a multi-dataset game with the usual indices.

# %%
import numpy as np

from hpi_games import (ConfigSpace, DatasetCollection, Discrete, GameSpec, indicator_sum_oracle,
                       multi_dataset_game, normalize_game, play, play_collection, shapley_values)

space = ConfigSpace(tuple((f"h{i}", Discrete(tuple(range(5)))) for i in range(3)), (0, 0, 0))
optima = {"d0": (4, 4, 0), "d1": (4, 0, 0), "d2": (4, 4, 4), "d3": (0, 0, 0)}
collection = DatasetCollection([indicator_sum_oracle(space, o, dataset=d) for d, o in optima.items()])
spec = GameSpec("tunability", space)

for label, oracle in collection:
    print(label, shapley_values(play(spec, oracle)).first_order())

# %%
mean = play_collection(spec, collection, "mean")
low = play_collection(spec, collection, ("quantile", 0.25))
print(mean.dataset, shapley_values(mean).first_order())
print(low.dataset, shapley_values(low).first_order())

# %% [markdown]
# Mean aggregation commutes with normalization (shifting so the empty
# coalition is worth zero).

# %%
games = [play(spec, o) for _, o in collection]
a = normalize_game(multi_dataset_game(games)).values
b = multi_dataset_game([normalize_game(g) for g in games]).values
print(np.allclose(a, b))

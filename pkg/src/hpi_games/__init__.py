"""Cooperative-game explanations of hyperparameter optimization.

Games (ablation, sensitivity, tunability, worst case, optimizer bias and
their multi-dataset aggregates) are computed as full coalition tables and
explained with exact Möbius interactions, Shapley values and Faithful
Shapley Interaction Indices.
"""
from .core import (Coalition, ConfigSpace, Continuous, Discrete, enumerate_coalitions, impute,
                   sample_configuration, sample_configurations)
from .errors import (ConfigurationError, FormatError, HPIError, MissingConfigurationError, OracleError,
                     SolverError, ValidationError)
from .games import (GameSpec, GameValues, SamplingPlan, SearchPlan, ablation_game, is_monotone,
                    marginal_ablation_game, monotonicity_violations, multi_dataset_game, normalize_game,
                    optimizer_bias_game, play, play_collection, sensitivity_game, tunability_game,
                    worst_case_game)
from .indices import (InteractionValues, faithfulness, fsii, moebius_strata, moebius_transform, r2_curve,
                      reconstruct, shapley_values, shapley_values_from_moebius, shapley_values_marginal)
from .optimizers import (Blinded, Exhaustive, IndependentTuner, RandomSearch, VirtualBest, default_ensemble,
                         independent_tuner_run, run_optimizer, virtual_best_run)
from .oracles import (DatasetCollection, FunctionOracle, PerformanceOracle, TabularOracle, binary_space,
                      constant_oracle, indicator_sum_oracle, perturb_oracle, product_indicator_oracle,
                      random_k_additive_oracle, tabular_oracle_from_file)

__version__ = "0.1.0"

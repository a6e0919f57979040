"""Explanation games over hyperparameter coalitions.

Each game is materialized as a dense table with one value per coalition,
indexed by bitmask. Exact modes evaluate the oracle once on the full grid of
a discrete space and read every coalition off that grid; sampling modes draw
one shared batch and blind it per coalition (coordinates outside the
coalition are reset to the baseline).
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .core import MAX_ENUMERATION, MAX_PLAYERS, Coalition, ConfigSpace, as_generator, as_mask, blind_codes, impute, sample_codes
from .errors import ConfigurationError, HPIError, OracleError, ValidationError
from .optimizers import _run_codes, default_ensemble
from .oracles import MemoOracle, evaluate_codes
from .subsets import subset_reduce

GAME_KINDS = ("ablation", "marginal_ablation", "sensitivity", "tunability", "worst_case", "optimizer_bias")


@dataclass(frozen=True)
class SamplingPlan:
    """How to average over the uniform distribution on a space."""

    mode: str = "exact"
    samples: int | None = None
    seed: int | None = None

    def __post_init__(self):
        if self.mode not in ("exact", "monte_carlo"):
            raise ConfigurationError(f"unknown sampling mode {self.mode!r}")
        if self.mode == "monte_carlo" and (self.samples is None or self.samples < 2):
            raise ConfigurationError("monte carlo sampling needs samples >= 2")

    @classmethod
    def exact(cls):
        return cls("exact")

    @classmethod
    def monte_carlo(cls, samples, seed=0):
        return cls("monte_carlo", int(samples), int(seed))


@dataclass(frozen=True)
class SearchPlan:
    """How to approximate a max (or min) over a blinded space."""

    mode: str = "exact"
    budget: int | None = None
    seed: int | None = None

    def __post_init__(self):
        if self.mode not in ("exact", "random_search"):
            raise ConfigurationError(f"unknown search mode {self.mode!r}")
        if self.mode == "random_search" and (self.budget is None or self.budget < 1):
            raise ConfigurationError("random search needs budget >= 1")

    @classmethod
    def exact(cls):
        return cls("exact")

    @classmethod
    def random_search(cls, budget, seed=0):
        return cls("random_search", int(budget), int(seed))


def _check_enumerable(space):
    if not space.is_discrete or space.cardinality > MAX_ENUMERATION:
        raise ConfigurationError(
            f"exact enumeration needs a discrete space with at most {MAX_ENUMERATION} configurations")


@dataclass(frozen=True)
class GameSpec:
    """Everything needed to play one game except the oracle.

    ``plan`` is a :class:`SamplingPlan` for marginal ablation and sensitivity
    and a :class:`SearchPlan` for tunability and worst case. For the
    optimizer-bias game ``optimizer`` is the optimizer under test and
    ``plan`` drives the reference (exact maximum, or the tested optimizer
    plus ``reference_size`` random searches).
    """

    kind: str
    space: ConfigSpace
    baseline: tuple | None = None
    target: tuple | None = None
    plan: SamplingPlan | SearchPlan | None = None
    optimizer: object = None
    reference_size: int = 5

    def __post_init__(self):
        if self.kind not in GAME_KINDS:
            raise ConfigurationError(f"unknown game kind {self.kind!r}; expected one of {GAME_KINDS}")
        baseline = self.space.default if self.baseline is None else self.baseline
        object.__setattr__(self, "baseline", self.space.validate(baseline, what="baseline"))
        if self.kind in ("ablation", "marginal_ablation"):
            if self.target is None:
                raise ConfigurationError(f"{self.kind} game needs a target configuration")
            object.__setattr__(self, "target", self.space.validate(self.target, what="target"))
        plan = self.plan
        if plan is None:
            plan = SamplingPlan() if self.kind in ("marginal_ablation", "sensitivity") else SearchPlan()
            object.__setattr__(self, "plan", plan)
        wants = SamplingPlan if self.kind in ("marginal_ablation", "sensitivity") else SearchPlan
        if self.kind != "ablation" and not isinstance(plan, wants):
            raise ConfigurationError(f"{self.kind} game needs a {wants.__name__}")
        if self.kind != "ablation" and plan.mode == "exact":
            _check_enumerable(self.space)
        if self.kind == "optimizer_bias" and self.optimizer is None:
            raise ConfigurationError("optimizer-bias game needs an optimizer under test")

    @property
    def seed(self):
        return getattr(self.plan, "seed", None) if self.kind != "ablation" else None


@dataclass(frozen=True, eq=False)
class GameValues:
    """Dense game table ``values[mask]`` plus metadata."""

    values: np.ndarray
    kind: str = "custom"
    baseline: tuple | None = None
    seed: int | None = None
    normalized: bool = False
    dataset: str | None = None
    player_names: tuple | None = None
    spec_hash: str | None = field(default=None, compare=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        n = int(values.shape[0]).bit_length() - 1 if values.ndim == 1 else -1
        if n < 0 or values.shape[0] != 1 << n or n > MAX_PLAYERS:
            raise ValidationError(f"game table length {values.shape} is not 2**n with n <= {MAX_PLAYERS}")
        if not np.all(np.isfinite(values)):
            raise ValidationError("game values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        names = self.player_names
        names = tuple(f"x{i}" for i in range(n)) if names is None else tuple(names)
        if len(names) != n:
            raise ValidationError(f"{len(names)} player names for a {n}-player game")
        object.__setattr__(self, "player_names", names)
        if self.baseline is not None:
            object.__setattr__(self, "baseline", tuple(self.baseline))

    @property
    def n(self):
        return int(self.values.shape[0]).bit_length() - 1

    def __len__(self):
        return self.values.shape[0]

    def __getitem__(self, s):
        return float(self.values[as_mask(s, self.n)])

    @property
    def empty_value(self):
        return float(self.values[0])

    @property
    def grand_value(self):
        return float(self.values[-1])

    def replace(self, **changes):
        return replace(self, **changes)


def _fill(n, fn, jobs=1):
    """Evaluate ``fn(mask)`` for every coalition; results land by mask index."""
    masks = range(1 << n)
    out = np.empty(1 << n)

    def call(mask):
        try:
            return fn(mask)
        except OracleError as exc:
            if exc.coalition is None:
                raise OracleError(str(exc), coalition=mask) from exc
            raise
        except HPIError as exc:
            raise OracleError(f"{type(exc).__name__}: {exc}", coalition=mask) from exc

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(call, masks))
    else:
        results = [call(m) for m in masks]
    out[:] = results
    for mask, v in enumerate(out):
        if not math.isfinite(v):
            raise OracleError(f"non-finite game value {v}", coalition=mask)
    return out


def _grid(space, oracle, jobs=1):
    """Oracle values on the full grid, shaped like the space."""
    codes = space.grid_codes()
    if jobs > 1 and len(codes) > 1:
        chunks = np.array_split(codes, jobs)
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(lambda c: evaluate_codes(oracle, c), chunks))
        values = np.concatenate(parts)
    else:
        values = evaluate_codes(oracle, codes)
    return values.reshape(space.shape)


def _slice(space, mask, inside, outside_codes):
    """Grid index: free axes for coalition members, fixed codes elsewhere."""
    idx = []
    for i in range(space.n):
        member = bool(mask >> i & 1)
        if member == inside:
            idx.append(slice(None))
        else:
            idx.append(int(outside_codes[i]))
    return tuple(idx)


def _meta(spec, oracle, kind=None):
    return dict(kind=kind or spec.kind, baseline=spec.baseline, seed=spec.seed,
                dataset=oracle.dataset, player_names=spec.space.names)


def _check_oracle(spec, oracle):
    if oracle.space != spec.space:
        raise ValidationError("oracle and game spec use different configuration spaces")


def ablation_game(spec: GameSpec, oracle, jobs=1) -> GameValues:
    """Value of ``target`` with only the coalition's coordinates switched from the baseline."""
    if spec.kind != "ablation":
        raise ValidationError(f"expected an ablation spec, got {spec.kind!r}")
    _check_oracle(spec, oracle)
    n = spec.space.n
    values = _fill(n, lambda m: oracle.evaluate(impute(spec.target, spec.baseline, Coalition(m, n))), jobs)
    return GameValues(values, **_meta(spec, oracle))


def marginal_ablation_game(target, oracle, plan: SamplingPlan, jobs=1) -> GameValues:
    """Ablation averaged over uniformly distributed baselines."""
    space = oracle.space
    spec = GameSpec("marginal_ablation", space, target=target, plan=plan)
    target_codes = space.encode([spec.target])[0]
    if plan.mode == "exact":
        grid = _grid(space, oracle, jobs)
        values = _fill(space.n, lambda m: float(grid[_slice(space, m, False, target_codes)].mean()), jobs)
    else:
        batch = sample_codes(space, plan.samples, as_generator(plan.seed))
        memo = MemoOracle(oracle)
        full = (1 << space.n) - 1

        def value(mask):
            # blinding with the target as "baseline" keeps the sample outside the coalition
            rows = blind_codes(batch, target_codes, full ^ mask)
            return float(evaluate_codes(memo, rows).mean())

        values = _fill(space.n, value, jobs)
    meta = _meta(spec, oracle)
    meta["baseline"] = None
    return GameValues(values, **meta)


def sensitivity_game(spec: GameSpec, oracle, jobs=1) -> GameValues:
    """Variance of performance when the coalition is randomized and the rest kept at the baseline."""
    if spec.kind != "sensitivity":
        raise ValidationError(f"expected a sensitivity spec, got {spec.kind!r}")
    _check_oracle(spec, oracle)
    space, plan = spec.space, spec.plan
    base_codes = space.encode([spec.baseline])[0]
    if plan.mode == "exact":
        grid = _grid(space, oracle, jobs)

        def value(mask):
            return float(np.var(grid[_slice(space, mask, True, base_codes)])) if mask else 0.0
    else:
        batch = sample_codes(space, plan.samples, as_generator(plan.seed))
        memo = MemoOracle(oracle)

        def value(mask):
            if not mask:
                return 0.0
            return float(np.var(evaluate_codes(memo, blind_codes(batch, base_codes, mask)), ddof=1))

    return GameValues(_fill(space.n, value, jobs), **_meta(spec, oracle))


def _search_game(spec, oracle, jobs, maximize):
    space, plan = spec.space, spec.plan
    base_codes = space.encode([spec.baseline])[0]
    reduce = np.max if maximize else np.min
    if plan.mode == "exact":
        grid = _grid(space, oracle, jobs)
        values = _fill(space.n, lambda m: float(reduce(grid[_slice(space, m, True, base_codes)])), jobs)
    else:
        batch = sample_codes(space, plan.budget, as_generator(plan.seed))
        memo = MemoOracle(oracle)
        values = _fill(space.n, lambda m: float(reduce(evaluate_codes(memo, blind_codes(batch, base_codes, m)))), jobs)
        # pool candidates over sub-coalitions: blind_T(batch) lies in the search space of every S ⊇ T
        values = subset_reduce(values, np.maximum if maximize else np.minimum)
    return GameValues(values, **_meta(spec, oracle))


def tunability_game(spec: GameSpec, oracle, jobs=1) -> GameValues:
    """Best performance reachable by tuning only the coalition."""
    if spec.kind != "tunability":
        raise ValidationError(f"expected a tunability spec, got {spec.kind!r}")
    _check_oracle(spec, oracle)
    return _search_game(spec, oracle, jobs, maximize=True)


def worst_case_game(spec: GameSpec, oracle, jobs=1) -> GameValues:
    """Worst performance reachable by mis-setting only the coalition."""
    if spec.kind != "worst_case":
        raise ValidationError(f"expected a worst-case spec, got {spec.kind!r}")
    _check_oracle(spec, oracle)
    return _search_game(spec, oracle, jobs, maximize=False)


def optimizer_bias_game(spec: GameSpec, oracle, jobs=1) -> GameValues:
    """Performance of the tested optimizer minus the virtual-best reference, per blinded space.

    The reference always contains the tested optimizer, so values are <= 0.
    """
    if spec.kind != "optimizer_bias":
        raise ValidationError(f"expected an optimizer-bias spec, got {spec.kind!r}")
    _check_oracle(spec, oracle)
    space, plan = spec.space, spec.plan
    base_codes = space.encode([spec.baseline])[0]
    memo = MemoOracle(oracle)
    if plan.mode == "exact":
        grid = _grid(space, memo, jobs)
        others = None
    else:
        others = default_ensemble(spec.optimizer, plan.budget, plan.seed, spec.reference_size).members[1:]

    def value(mask):
        _, tested = _run_codes(spec.optimizer, memo, space, mask, base_codes)
        if others is None:
            reference = float(np.max(grid[_slice(space, mask, True, base_codes)]))
        else:
            reference = max(_run_codes(o, memo, space, mask, base_codes)[1] for o in others)
        return tested - max(tested, reference)

    values = _fill(space.n, value, jobs)
    if np.any(values > 0):
        warnings.warn("optimizer-bias game has positive values; the reference does not dominate the tested optimizer")
    return GameValues(values, **_meta(spec, oracle))


_PLAYERS = {
    "ablation": ablation_game,
    "sensitivity": sensitivity_game,
    "tunability": tunability_game,
    "worst_case": worst_case_game,
    "optimizer_bias": optimizer_bias_game,
}


def play(spec: GameSpec, oracle, jobs=1) -> GameValues:
    """Dispatch on ``spec.kind``."""
    if spec.kind == "marginal_ablation":
        _check_oracle(spec, oracle)
        return marginal_ablation_game(spec.target, oracle, spec.plan, jobs)
    return _PLAYERS[spec.kind](spec, oracle, jobs)


def _parse_aggregator(aggregator):
    if isinstance(aggregator, tuple):
        name, q = aggregator
    elif isinstance(aggregator, str) and aggregator.startswith("quantile"):
        name, _, q = aggregator.partition(":")
        q = float(q) if q else 0.5
    else:
        name, q = aggregator, None
    if name == "mean":
        return "mean", None
    if name != "quantile":
        raise ConfigurationError(f"unknown aggregator {aggregator!r}")
    q = float(q)
    if not 0.0 <= q <= 1.0:
        raise ConfigurationError(f"quantile must lie in [0, 1], got {q}")
    return "quantile", q


def multi_dataset_game(games, aggregator="mean") -> GameValues:
    """Aggregate per-dataset games coalition-wise.

    ``aggregator`` is ``"mean"``, ``"quantile:q"`` or ``("quantile", q)``.
    Quantiles take the order statistic at index ``floor(q * (M - 1))``.
    """
    games = list(games)
    if not games:
        raise ValidationError("no games to aggregate")
    first = games[0]
    for g in games[1:]:
        if g.n != first.n:
            raise ValidationError(f"games over {first.n} and {g.n} players cannot be aggregated")
        if g.kind != first.kind:
            raise ValidationError(f"games of kind {first.kind!r} and {g.kind!r} cannot be aggregated")
    name, q = _parse_aggregator(aggregator)
    stack = np.stack([g.values for g in games])
    if name == "mean":
        values = stack.mean(axis=0)
        label = "multi(mean)"
    else:
        values = np.sort(stack, axis=0)[math.floor(q * (len(games) - 1))]
        label = f"multi(q={q:g})"
    baselines = {g.baseline for g in games}
    return GameValues(values, kind=first.kind, baseline=baselines.pop() if len(baselines) == 1 else None,
                      seed=first.seed, normalized=all(g.normalized for g in games), dataset=label,
                      player_names=first.player_names)


def play_collection(spec: GameSpec, collection, aggregator="mean", jobs=1) -> GameValues:
    """Play ``spec`` on every dataset of a :class:`DatasetCollection` and aggregate."""
    games = []
    for label, oracle in collection:
        games.append(play(spec, oracle, jobs).replace(dataset=label))
    return multi_dataset_game(games, aggregator)


def normalize_game(g: GameValues) -> GameValues:
    """Shift so the empty coalition is worth zero."""
    return g.replace(values=g.values - g.values[0], normalized=True)


def monotonicity_violations(g: GameValues, tol=0.0):
    """Pairs ``(S, S | {i})`` with ``v(S) > v(S | {i}) + tol``.

    Checking single-player extensions suffices: any violation along a chain
    ``S ⊂ T`` shows up on one of its steps.
    """
    out = []
    v = g.values
    for mask in range(len(v)):
        for i in range(g.n):
            bit = 1 << i
            if not mask & bit and v[mask] > v[mask | bit] + tol:
                out.append((Coalition(mask, g.n), Coalition(mask | bit, g.n)))
    return out


def is_monotone(g: GameValues, tol=0.0) -> bool:
    return not monotonicity_violations(g, tol)

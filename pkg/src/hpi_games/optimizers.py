"""Hyperparameter optimizers searching a blinded space.

Every optimizer receives a coalition ``S`` and a baseline and may only vary
the coordinates in ``S``; all others stay at the baseline. A run draws its
randomness from ``(seed, mask)``, so runs for different coalitions are
independent of execution order.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Coalition, ConfigSpace, Discrete, MAX_ENUMERATION, as_mask, blind_codes, sample_codes
from .errors import ConfigurationError, FormatError, ValidationError
from .oracles import evaluate_codes


@dataclass(frozen=True)
class RandomSearch:
    budget: int
    seed: int = 0

    def __post_init__(self):
        if self.budget < 1:
            raise ConfigurationError("budget must be >= 1")


@dataclass(frozen=True)
class IndependentTuner:
    """Tunes one player at a time, holding the others at their current values."""

    per_player_budget: int
    seed: int = 0

    def __post_init__(self):
        if self.per_player_budget < 1:
            raise ConfigurationError("per_player_budget must be >= 1")


@dataclass(frozen=True)
class Blinded:
    """Delegates to ``inner`` but never tunes ``frozen_players``."""

    inner: object
    frozen_players: tuple

    def __post_init__(self):
        frozen = self.frozen_players
        if isinstance(frozen, Coalition):
            frozen = frozen.members
        object.__setattr__(self, "frozen_players", tuple(sorted(int(i) for i in frozen)))


@dataclass(frozen=True)
class VirtualBest:
    """Best result of any member; ties go to the earlier member."""

    members: tuple

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        if not self.members:
            raise ConfigurationError("virtual best needs at least one member")


@dataclass(frozen=True)
class Exhaustive:
    """Enumerates the whole blinded space (discrete spaces only)."""


OptimizerSpec = RandomSearch | IndependentTuner | Blinded | VirtualBest | Exhaustive


def optimizer_to_dict(spec):
    match spec:
        case RandomSearch(budget, seed):
            return {"kind": "random_search", "budget": budget, "seed": seed}
        case IndependentTuner(budget, seed):
            return {"kind": "independent_tuner", "per_player_budget": budget, "seed": seed}
        case Blinded(inner, frozen):
            return {"kind": "blinded", "inner": optimizer_to_dict(inner), "frozen_players": list(frozen)}
        case VirtualBest(members):
            return {"kind": "virtual_best", "members": [optimizer_to_dict(m) for m in members]}
        case Exhaustive():
            return {"kind": "exhaustive"}
    raise ConfigurationError(f"not an optimizer spec: {spec!r}")


def optimizer_from_dict(d, names=None):
    """Inverse of :func:`optimizer_to_dict`. Frozen players may be given by name."""
    try:
        kind = d["kind"]
        if kind == "random_search":
            return RandomSearch(int(d["budget"]), int(d.get("seed", 0)))
        if kind == "independent_tuner":
            return IndependentTuner(int(d["per_player_budget"]), int(d.get("seed", 0)))
        if kind == "blinded":
            frozen = [names.index(p) if isinstance(p, str) and names else int(p) for p in d["frozen_players"]]
            return Blinded(optimizer_from_dict(d["inner"], names), tuple(frozen))
        if kind == "virtual_best":
            return VirtualBest(tuple(optimizer_from_dict(m, names) for m in d["members"]))
        if kind == "exhaustive":
            return Exhaustive()
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed optimizer spec {d!r}: {exc}") from None
    raise FormatError(f"unknown optimizer kind {kind!r}")


def _stream(seed, mask):
    return np.random.default_rng([int(seed), int(mask)])


def _best(codes, values, maximize=True):
    i = int(np.argmax(values) if maximize else np.argmin(values))
    return codes[i], float(values[i])


def _random_search_codes(oracle, space, mask, baseline_codes, budget, seed):
    codes = blind_codes(sample_codes(space, budget, _stream(seed, mask)), baseline_codes, mask)
    return _best(codes, evaluate_codes(oracle, codes))


def exhaustive_codes(space, mask, baseline_codes):
    """Code matrix of the blinded space, enumerated in row-major order."""
    members = [i for i in range(space.n) if mask >> i & 1]
    for i in members:
        if not isinstance(space.domains[i], Discrete):
            raise ConfigurationError("exhaustive search needs discrete domains on the tuned players")
    sizes = [space.domains[i].size for i in members]
    if np.prod(sizes, dtype=float) > MAX_ENUMERATION:
        raise ConfigurationError(f"blinded space larger than {MAX_ENUMERATION} configurations")
    codes = np.tile(np.asarray(baseline_codes, dtype=float), (int(np.prod(sizes, dtype=np.int64)), 1))
    if members:
        grids = np.meshgrid(*[np.arange(s, dtype=float) for s in sizes], indexing="ij")
        for i, g in zip(members, grids):
            codes[:, i] = g.ravel()
    return codes


def _tuner_codes(oracle, space, mask, baseline_codes, per_player_budget, seed):
    current = np.array(baseline_codes, dtype=float)
    value = float(evaluate_codes(oracle, current[None, :])[0])
    streams = _stream(seed, mask).spawn(space.n)
    for i in range(space.n):
        if not mask >> i & 1:
            continue
        candidates = np.tile(current, (per_player_budget, 1))
        candidates[:, i] = space.domains[i].sample_codes(streams[i], per_player_budget)
        row, best = _best(candidates, evaluate_codes(oracle, candidates))
        # incumbent kept on ties so a flat move never drifts away from it
        if best > value:
            current, value = row.copy(), best
    return current, value


def _run_codes(spec, oracle, space, mask, baseline_codes):
    match spec:
        case RandomSearch(budget, seed):
            return _random_search_codes(oracle, space, mask, baseline_codes, budget, seed)
        case IndependentTuner(budget, seed):
            return _tuner_codes(oracle, space, mask, baseline_codes, budget, seed)
        case Blinded(inner, frozen):
            if any(not 0 <= i < space.n for i in frozen):
                raise ValidationError(f"frozen players {frozen} outside 0..{space.n - 1}")
            frozen_mask = as_mask(frozen)
            return _run_codes(inner, oracle, space, mask & ~frozen_mask, baseline_codes)
        case VirtualBest(members):
            best = None
            for m in members:
                result = _run_codes(m, oracle, space, mask, baseline_codes)
                if best is None or result[1] > best[1]:
                    best = result
            return best
        case Exhaustive():
            codes = exhaustive_codes(space, mask, baseline_codes)
            return _best(codes, evaluate_codes(oracle, codes))
    raise ConfigurationError(f"not an optimizer spec: {spec!r}")


def run_optimizer(spec, oracle, space: ConfigSpace, coalition, baseline):
    """Run ``spec`` on the blinded space of ``coalition``.

    Returns
    -------
    (configuration, value)
        The returned configuration agrees with ``baseline`` outside the
        coalition.
    """
    mask = as_mask(coalition, space.n)
    if not 0 <= mask < 1 << space.n:
        raise ValidationError(f"coalition mask {mask} outside {space.n} players")
    baseline = space.validate(baseline, what="baseline")
    codes, value = _run_codes(spec, oracle, space, mask, space.encode([baseline])[0])
    return space.decode(codes)[0], value


def virtual_best_run(members, oracle, space, coalition, baseline):
    return run_optimizer(VirtualBest(tuple(members)), oracle, space, coalition, baseline)


def default_ensemble(tested, budget=10_000, seed=0, count=5):
    """The tested optimizer plus ``count`` random searches with derived seeds."""
    seeds = np.random.SeedSequence([int(seed), count]).generate_state(count)
    return VirtualBest((tested, *(RandomSearch(budget, int(s)) for s in seeds)))


def independent_tuner_run(oracle, space, coalition, baseline, per_player_budget, seed):
    return run_optimizer(IndependentTuner(per_player_budget, seed), oracle, space, coalition, baseline)

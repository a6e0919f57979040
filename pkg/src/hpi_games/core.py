"""Configuration spaces, coalitions and baseline imputation.

Players (hyperparameters) are identified by their position in a
:class:`ConfigSpace`; names are display metadata only. A configuration is a
plain tuple of atoms, index-aligned with the space's players. Coalitions are
bitmasks where bit ``i`` stands for player ``i``.
"""
from __future__ import annotations

import json
import math
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, FormatError, ValidationError

MAX_PLAYERS = 20
MAX_ENUMERATION = 1_000_000

Configuration = tuple


def _atom_key(atom):
    # True == 1 in Python; keep booleans distinct from integers
    return (isinstance(atom, bool), atom)


def _is_atom(x):
    return isinstance(x, (bool, int, float, str, np.integer, np.floating, np.bool_))


def _plain(atom):
    """Convert numpy scalars to the builtin type (for hashing and JSON)."""
    if isinstance(atom, np.generic):
        return atom.item()
    return atom


@dataclass(frozen=True)
class Discrete:
    """Finite ordered domain of atoms (ints, floats, strings or booleans)."""

    values: tuple

    def __post_init__(self):
        values = tuple(_plain(v) for v in self.values)
        if not values:
            raise ConfigurationError("discrete domain must be non-empty")
        for v in values:
            if not _is_atom(v):
                raise ConfigurationError(f"unsupported atom {v!r}")
            if isinstance(v, float) and not math.isfinite(v):
                raise ConfigurationError(f"non-finite atom {v!r}")
        keys = [_atom_key(v) for v in values]
        if len(set(keys)) != len(keys):
            raise ConfigurationError(f"discrete domain has duplicate atoms: {list(values)!r}")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "_index", {k: i for i, k in enumerate(keys)})

    @property
    def size(self):
        return len(self.values)

    def __contains__(self, atom):
        try:
            return _atom_key(_plain(atom)) in self._index
        except TypeError:
            return False

    def index(self, atom):
        """Position of ``atom`` within the domain."""
        try:
            return self._index[_atom_key(_plain(atom))]
        except (KeyError, TypeError):
            raise ValidationError(f"{atom!r} is not in domain {list(self.values)!r}") from None

    def sample_codes(self, rng, size):
        return rng.integers(0, len(self.values), size=size).astype(float)

    def to_dict(self):
        return {"kind": "discrete", "values": list(self.values)}


@dataclass(frozen=True)
class Continuous:
    """Closed real interval, optionally sampled on a log scale."""

    lower: float
    upper: float
    log_scale: bool = False

    def __post_init__(self):
        lower, upper = float(self.lower), float(self.upper)
        if not (math.isfinite(lower) and math.isfinite(upper)):
            raise ConfigurationError("continuous bounds must be finite")
        if not lower < upper:
            raise ConfigurationError(f"continuous domain needs lower < upper, got [{lower}, {upper}]")
        if self.log_scale and lower <= 0:
            raise ConfigurationError("log-scaled domain requires lower > 0")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "log_scale", bool(self.log_scale))

    @property
    def size(self):
        return math.inf

    def __contains__(self, x):
        if isinstance(x, (bool, np.bool_, str)) or not isinstance(x, (int, float, np.integer, np.floating)):
            return False
        return self.lower <= float(x) <= self.upper

    def sample_codes(self, rng, size):
        if self.log_scale:
            x = np.exp(rng.uniform(math.log(self.lower), math.log(self.upper), size=size))
        else:
            x = rng.uniform(self.lower, self.upper, size=size)
        return np.clip(x, self.lower, self.upper)

    def to_dict(self):
        return {"kind": "continuous", "lower": self.lower, "upper": self.upper,
                "log_scale": self.log_scale}


HyperparameterDomain = Discrete | Continuous


def domain_from_dict(d):
    try:
        kind = d["kind"]
        if kind == "discrete":
            return Discrete(tuple(d["values"]))
        if kind == "continuous":
            return Continuous(d["lower"], d["upper"], bool(d.get("log_scale", False)))
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed domain {d!r}: {exc}") from None
    raise FormatError(f"unknown domain kind {kind!r}")


@dataclass(frozen=True)
class ConfigSpace:
    """Ordered hyperparameters with their domains and a default configuration.

    Parameters
    ----------
    players : sequence of (name, domain)
        Player order fixes the coalition bit positions.
    default : sequence of atoms
        Default configuration, one coordinate per player.
    """

    players: tuple
    default: tuple

    def __post_init__(self):
        players = tuple((str(name), dom) for name, dom in self.players)
        if not 1 <= len(players) <= MAX_PLAYERS:
            raise ConfigurationError(f"player count must be in [1, {MAX_PLAYERS}], got {len(players)}")
        names = [p[0] for p in players]
        if len(set(names)) != len(names):
            raise ConfigurationError(f"player names must be unique: {names}")
        for name, dom in players:
            if not isinstance(dom, (Discrete, Continuous)):
                raise ConfigurationError(f"player {name!r} has no valid domain")
        object.__setattr__(self, "players", players)
        default = tuple(_plain(a) for a in self.default)
        object.__setattr__(self, "default", default)
        self.validate(default, what="default")

    @property
    def n(self):
        return len(self.players)

    @property
    def names(self):
        return tuple(p[0] for p in self.players)

    @property
    def domains(self):
        return tuple(p[1] for p in self.players)

    @property
    def is_discrete(self):
        return all(isinstance(d, Discrete) for d in self.domains)

    @property
    def cardinality(self):
        """Number of configurations (``inf`` for spaces with continuous players)."""
        if not self.is_discrete:
            return math.inf
        return math.prod(d.size for d in self.domains)

    @property
    def shape(self):
        if not self.is_discrete:
            raise ConfigurationError("continuous spaces have no grid shape")
        return tuple(d.size for d in self.domains)

    def contains(self, config):
        if len(config) != self.n:
            return False
        return all(a in d for a, d in zip(config, self.domains))

    def validate(self, config, what="configuration"):
        """Return ``config`` as a tuple or raise if it is not in the space."""
        config = tuple(_plain(a) for a in config)
        if len(config) != self.n:
            raise ValidationError(f"{what} has {len(config)} coordinates, space has {self.n}")
        for name, a, d in zip(self.names, config, self.domains):
            if a not in d:
                raise ValidationError(f"{what}: value {a!r} of {name!r} is outside its domain")
        return config

    # -- encoding: discrete coordinates become domain indices, continuous stay as values
    def encode(self, configs):
        configs = list(configs)
        out = np.empty((len(configs), self.n))
        for i, d in enumerate(self.domains):
            if isinstance(d, Discrete):
                out[:, i] = [d.index(c[i]) for c in configs]
            else:
                out[:, i] = [float(c[i]) for c in configs]
        return out

    def decode(self, codes):
        codes = np.atleast_2d(codes)
        cols = []
        for i, d in enumerate(self.domains):
            if isinstance(d, Discrete):
                cols.append([d.values[int(c)] for c in codes[:, i]])
            else:
                cols.append([float(c) for c in codes[:, i]])
        return [tuple(row) for row in zip(*cols)]

    def grid_codes(self):
        """All configurations of a discrete space as codes, in C (row-major) order."""
        if self.cardinality > MAX_ENUMERATION:
            raise ConfigurationError(
                f"exact enumeration needs a discrete space with at most {MAX_ENUMERATION} "
                f"configurations (this one has {self.cardinality})")
        grids = np.meshgrid(*[np.arange(s, dtype=float) for s in self.shape], indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)

    def to_dict(self):
        return {"players": [{"name": n, "domain": d.to_dict()} for n, d in self.players],
                "default": list(self.default)}

    @classmethod
    def from_dict(cls, d):
        try:
            players = [(p["name"], domain_from_dict(p["domain"])) for p in d["players"]]
            default = d["default"]
        except (KeyError, TypeError) as exc:
            raise FormatError(f"malformed configuration space: {exc}") from None
        return cls(tuple(players), tuple(default))

    @classmethod
    def load(cls, path):
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: {exc}") from None
        return cls.from_dict(data)

    def with_default(self, default):
        return ConfigSpace(self.players, tuple(default))


@dataclass(frozen=True, order=True)
class Coalition:
    """A subset of player indices stored as a bitmask over ``n`` players."""

    mask: int
    n: int = field(compare=False)

    def __post_init__(self):
        mask, n = int(self.mask), int(self.n)
        if not 0 <= n <= MAX_PLAYERS:
            raise ConfigurationError(f"player count must be in [0, {MAX_PLAYERS}], got {n}")
        if not 0 <= mask < (1 << n):
            raise ValidationError(f"mask {mask} has bits outside {n} players")
        object.__setattr__(self, "mask", mask)
        object.__setattr__(self, "n", n)

    @classmethod
    def from_members(cls, members: Iterable[int], n: int) -> Coalition:
        mask = 0
        for i in members:
            if not 0 <= i < n:
                raise ValidationError(f"player index {i} outside 0..{n - 1}")
            mask |= 1 << i
        return cls(mask, n)

    @classmethod
    def empty(cls, n):
        return cls(0, n)

    @classmethod
    def full(cls, n):
        return cls((1 << n) - 1, n)

    @property
    def members(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.n) if self.mask >> i & 1)

    def __iter__(self) -> Iterator[int]:
        return iter(self.members)

    def __len__(self):
        return self.mask.bit_count()

    def __contains__(self, i):
        return 0 <= i < self.n and bool(self.mask >> i & 1)

    def _check(self, other):
        if other.n != self.n:
            raise ValidationError(f"coalitions over {self.n} and {other.n} players")

    def __or__(self, other):
        self._check(other)
        return Coalition(self.mask | other.mask, self.n)

    def __and__(self, other):
        self._check(other)
        return Coalition(self.mask & other.mask, self.n)

    def complement(self):
        return Coalition(((1 << self.n) - 1) ^ self.mask, self.n)

    def issubset(self, other):
        self._check(other)
        return self.mask & ~other.mask == 0

    def names(self, names):
        return [names[i] for i in self.members]

    def __repr__(self):
        return f"Coalition({{{', '.join(str(i) for i in self.members)}}}, n={self.n})"


class CoalitionSequence(Sequence):
    """All ``2**n`` coalitions in ascending mask order; item ``i`` has mask ``i``."""

    def __init__(self, n):
        self.n = n

    def __len__(self):
        return 1 << self.n

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        if i < 0:
            i += len(self)
        if not 0 <= i < len(self):
            raise IndexError(i)
        return Coalition(i, self.n)


def enumerate_coalitions(n: int) -> CoalitionSequence:
    if not 1 <= n <= MAX_PLAYERS:
        raise ConfigurationError(f"player count must be in [1, {MAX_PLAYERS}], got {n}")
    return CoalitionSequence(n)


def as_mask(s, n=None):
    """Accept a :class:`Coalition`, an int mask or an iterable of player indices."""
    if isinstance(s, Coalition):
        if n is not None and s.n != n:
            raise ValidationError(f"coalition over {s.n} players, expected {n}")
        return s.mask
    if isinstance(s, (int, np.integer)):
        return int(s)
    mask = 0
    for i in s:
        mask |= 1 << int(i)
    return mask


def impute(target: Sequence, baseline: Sequence, s: Coalition) -> Configuration:
    """Take coordinates in ``s`` from ``target`` and all others from ``baseline``."""
    if len(target) != len(baseline):
        raise ValidationError(f"target has {len(target)} coordinates, baseline {len(baseline)}")
    if s.n != len(target):
        raise ValidationError(f"coalition over {s.n} players for {len(target)}-dimensional configurations")
    m = s.mask
    return tuple(t if m >> i & 1 else b for i, (t, b) in enumerate(zip(target, baseline)))


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def sample_codes(space: ConfigSpace, size: int, rng) -> np.ndarray:
    """Draw ``size`` uniform configurations as a code matrix.

    Each coordinate reads from its own child stream, so the first ``b`` rows
    of a larger draw equal a draw of size ``b`` from the same seed.
    """
    streams = as_generator(rng).spawn(space.n)
    out = np.empty((size, space.n))
    for i, (d, g) in enumerate(zip(space.domains, streams)):
        out[:, i] = d.sample_codes(g, size)
    return out


def sample_configuration(space: ConfigSpace, rng) -> Configuration:
    return space.decode(sample_codes(space, 1, rng))[0]


def sample_configurations(space: ConfigSpace, size: int, rng) -> list[Configuration]:
    return space.decode(sample_codes(space, size, rng)) if size else []


def blind_codes(codes, baseline_codes, mask):
    """Overwrite the columns outside ``mask`` with the baseline codes."""
    n = codes.shape[1]
    keep = np.array([bool(mask >> i & 1) for i in range(n)])
    return np.where(keep, codes, baseline_codes)

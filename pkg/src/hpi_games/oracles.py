"""Performance oracles: map a full configuration to a validation score.

Higher is better everywhere; wrap loss-style functions with a negation.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import threading
from pathlib import Path

import numpy as np

from .core import ConfigSpace, Discrete, _atom_key, _plain, as_generator
from .errors import ConfigurationError, FormatError, MissingConfigurationError, OracleError, ValidationError
from .subsets import zeta


class PerformanceOracle:
    """Base class. Subclasses implement ``_value(config) -> float``.

    ``evaluate`` rejects non-finite results, so NaNs never reach a game table.
    """

    def __init__(self, space: ConfigSpace, dataset: str | None = None):
        self.space = space
        self.dataset = dataset

    def _value(self, config) -> float:
        raise NotImplementedError

    def evaluate(self, config) -> float:
        value = float(self._value(tuple(config)))
        if not math.isfinite(value):
            raise OracleError(f"oracle returned non-finite value {value} for {list(config)!r}")
        return value

    def batch_evaluate(self, configs) -> list[float]:
        return [self.evaluate(c) for c in configs]

    def __call__(self, config):
        return self.evaluate(config)


class FunctionOracle(PerformanceOracle):
    """Wrap a plain callable ``fn(config) -> float``."""

    def __init__(self, space, fn, dataset=None):
        super().__init__(space, dataset)
        self.fn = fn

    def _value(self, config):
        return self.fn(config)


def constant_oracle(space, value=0.0, dataset=None):
    return FunctionOracle(space, lambda config: value, dataset)


class IndicatorSumOracle(PerformanceOracle):
    """Number of coordinates that match ``optimum``."""

    def __init__(self, space, optimum, dataset=None):
        super().__init__(space, dataset)
        try:
            self.optimum = space.validate(optimum, what="optimum")
        except ValidationError as exc:
            raise ConfigurationError(str(exc)) from None
        self._keys = [_atom_key(a) for a in self.optimum]

    def _value(self, config):
        return float(sum(_atom_key(_plain(a)) == k for a, k in zip(config, self._keys)))


class ProductIndicatorOracle(PerformanceOracle):
    """1 if the configuration equals ``anchor`` coordinate-wise, else 0."""

    def __init__(self, space, anchor, dataset=None):
        super().__init__(space, dataset)
        try:
            self.anchor = space.validate(anchor, what="anchor")
        except ValidationError as exc:
            raise ConfigurationError(str(exc)) from None
        self._keys = [_atom_key(a) for a in self.anchor]

    def _value(self, config):
        return float(all(_atom_key(_plain(a)) == k for a, k in zip(config, self._keys)))


def indicator_sum_oracle(space, optimum, dataset=None):
    return IndicatorSumOracle(space, optimum, dataset)


def product_indicator_oracle(space, anchor, dataset=None):
    return ProductIndicatorOracle(space, anchor, dataset)


def _row_key(config):
    return tuple(_atom_key(_plain(a)) for a in config)


class TabularOracle(PerformanceOracle):
    """Exact-match lookup table.

    Parameters
    ----------
    space : ConfigSpace
    rows : mapping or iterable of (configuration, value)
    missing_policy : "error" or float
        ``"error"`` raises :class:`MissingConfigurationError` for unknown
        configurations; a number is returned instead when given.
    """

    def __init__(self, space, rows, missing_policy="error", dataset=None):
        super().__init__(space, dataset)
        if missing_policy != "error" and not isinstance(missing_policy, (int, float)):
            raise ConfigurationError(f"missing_policy must be 'error' or a number, got {missing_policy!r}")
        self.missing_policy = missing_policy
        items = rows.items() if hasattr(rows, "items") else rows
        table = {}
        bad = []
        for lineno, (config, value) in enumerate(items, start=1):
            config = tuple(_plain(a) for a in config)
            value = float(value)
            if not space.contains(config) or not math.isfinite(value):
                bad.append((lineno, list(config), value))
                continue
            key = _row_key(config)
            if key in table and table[key][1] != value:
                raise ValidationError(f"row {lineno}: configuration {list(config)!r} stored twice with different values")
            table[key] = (config, value)
        if bad:
            listing = "; ".join(f"row {i}: {c!r} -> {v!r}" for i, c, v in bad)
            raise ValidationError(f"rows outside the configuration space or with non-finite values: {listing}")
        self._table = table

    def __len__(self):
        return len(self._table)

    @property
    def rows(self):
        return [entry for entry in self._table.values()]

    def _value(self, config):
        hit = self._table.get(_row_key(config))
        if hit is not None:
            return hit[1]
        if self.missing_policy == "error":
            raise MissingConfigurationError(config)
        return float(self.missing_policy)


def _parse_json_rows(data):
    try:
        return [(tuple(r["config"]), r["value"]) for r in data["rows"]]
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed tabular JSON: {exc}") from None


def _parse_csv_rows(text, space):
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise FormatError("empty tabular CSV") from None
    if len(header) != space.n + 1 or header[-1].strip() != "performance":
        raise FormatError(f"CSV header must be the player names followed by 'performance', got {header}")
    names = [h.strip() for h in header[:-1]]
    if sorted(names) != sorted(space.names):
        raise FormatError(f"CSV columns {names} do not match players {list(space.names)}")
    order = [names.index(name) for name in space.names]
    rows = []
    for lineno, cells in enumerate(reader, start=2):
        if not cells:
            continue
        if len(cells) != len(header):
            raise FormatError(f"line {lineno}: expected {len(header)} cells, got {len(cells)}")
        try:
            atoms = [json.loads(c) for c in cells]
        except json.JSONDecodeError as exc:
            raise FormatError(f"line {lineno}: {exc}") from None
        rows.append((tuple(atoms[j] for j in order), atoms[-1]))
    return rows


def tabular_oracle_from_file(path, space, missing_policy="error", dataset=None):
    """Load a CSV (``names..., performance``) or JSON (``{"rows": [...]}``) table."""
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: {exc}") from None
        rows = _parse_json_rows(data)
    else:
        rows = _parse_csv_rows(text, space)
    return TabularOracle(space, rows, missing_policy, dataset)


def write_tabular(path, space, rows):
    """Write ``(configuration, value)`` rows in the format implied by the suffix."""
    path = Path(path)
    rows = list(rows)
    if path.suffix.lower() == ".json":
        data = {"rows": [{"config": list(c), "value": float(v)} for c, v in rows]}
        path.write_text(json.dumps(data, sort_keys=True) + "\n")
        return
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([*space.names, "performance"])
    for c, v in rows:
        writer.writerow([json.dumps(_plain(a)) for a in c] + [json.dumps(float(v))])
    path.write_text(buf.getvalue())


def binary_space(n, names=None):
    """``n`` on/off switch players with domain {0, 1} and default all-off."""
    names = names or [f"x{i}" for i in range(n)]
    return ConfigSpace(tuple((name, Discrete((0, 1))) for name in names), (0,) * n)


class KAdditiveOracle(PerformanceOracle):
    """Game with random Möbius coefficients on coalitions of size <= k.

    A configuration is read as the coalition of players set to the second
    atom of their (two-atom) domain.
    """

    def __init__(self, space, k, rng, dataset=None):
        super().__init__(space, dataset)
        n = space.n
        if not 1 <= k <= n:
            raise ConfigurationError(f"order k must be in [1, {n}], got {k}")
        if not all(isinstance(d, Discrete) and d.size == 2 for d in space.domains):
            raise ConfigurationError("k-additive oracle needs two-atom (switch) domains")
        self.k = k
        rng = as_generator(rng)
        masks = np.arange(1 << n)
        sizes = np.array([int(m).bit_count() for m in masks])
        coef = rng.uniform(-1.0, 1.0, size=1 << n)
        coef[sizes > k] = 0.0
        self.moebius = coef
        self.table = zeta(coef)
        self._on = [_atom_key(d.values[1]) for d in space.domains]

    def coalition_of(self, config):
        mask = 0
        for i, (a, on) in enumerate(zip(config, self._on)):
            if _atom_key(_plain(a)) == on:
                mask |= 1 << i
        return mask

    def _value(self, config):
        return self.table[self.coalition_of(config)]


def random_k_additive_oracle(space, k, rng, dataset=None):
    return KAdditiveOracle(space, k, rng, dataset)


class PerturbedOracle(PerformanceOracle):
    """``base`` plus a per-configuration offset drawn uniformly from [-eps, eps].

    The offset is a function of (stream key, configuration), so it does not
    depend on query order; results are memoized under a lock.
    """

    def __init__(self, base, epsilon, rng):
        super().__init__(base.space, base.dataset)
        if epsilon < 0:
            raise ConfigurationError("epsilon must be non-negative")
        self.base = base
        self.epsilon = float(epsilon)
        self._key = int(as_generator(rng).integers(2**63))
        self._memo = {}
        self._lock = threading.Lock()

    def offset(self, config):
        if self.epsilon == 0.0:
            return 0.0
        key = _row_key(config)
        with self._lock:
            hit = self._memo.get(key)
        if hit is not None:
            return hit
        digest = hashlib.sha256(json.dumps([_plain(a) for a in config]).encode()).digest()
        words = [int.from_bytes(digest[i:i + 4], "little") for i in range(0, 32, 4)]
        delta = float(np.random.default_rng([self._key, *words]).uniform(-self.epsilon, self.epsilon))
        with self._lock:
            return self._memo.setdefault(key, delta)

    def _value(self, config):
        return self.base.evaluate(config) + self.offset(config)


def perturb_oracle(base, epsilon, rng):
    return PerturbedOracle(base, epsilon, rng)


class DatasetCollection:
    """Oracles for several datasets over one shared configuration space."""

    def __init__(self, oracles, labels=None):
        oracles = list(oracles)
        if not oracles:
            raise ValidationError("a dataset collection needs at least one oracle")
        space = oracles[0].space
        for o in oracles[1:]:
            if o.space != space:
                raise ValidationError("all oracles in a collection must share one configuration space")
        if labels is None:
            labels = [o.dataset or f"D{i + 1}" for i, o in enumerate(oracles)]
        labels = list(labels)
        if len(labels) != len(oracles):
            raise ValidationError("one label per oracle required")
        self.oracles = oracles
        self.labels = labels
        self.space = space

    def __len__(self):
        return len(self.oracles)

    def __iter__(self):
        return iter(zip(self.labels, self.oracles))


class MemoOracle(PerformanceOracle):
    """Thread-safe memoizing view of another (deterministic) oracle."""

    def __init__(self, base):
        super().__init__(base.space, base.dataset)
        self.base = base
        self._memo = {}
        self._lock = threading.Lock()

    def evaluate(self, config):
        key = _row_key(config)
        with self._lock:
            hit = self._memo.get(key)
        if hit is None:
            hit = self.base.evaluate(config)
            with self._lock:
                self._memo[key] = hit
        return hit

    def batch_evaluate(self, configs):
        configs = list(configs)
        keys = [_row_key(c) for c in configs]
        with self._lock:
            missing = [(k, c) for k, c in zip(keys, configs) if k not in self._memo]
        if missing:
            fresh = dict(missing)
            values = self.base.batch_evaluate(list(fresh.values()))
            with self._lock:
                self._memo.update(zip(fresh.keys(), values))
        with self._lock:
            return [self._memo[k] for k in keys]


def evaluate_codes(oracle, codes):
    """Evaluate a code matrix, querying each distinct configuration once."""
    codes = np.asarray(codes, dtype=float)
    uniq, inverse = np.unique(codes, axis=0, return_inverse=True)
    configs = oracle.space.decode(uniq)
    values = np.array(oracle.batch_evaluate(configs), dtype=float)
    if not np.all(np.isfinite(values)):
        raise OracleError("oracle returned non-finite values")
    return values[inverse.ravel()]

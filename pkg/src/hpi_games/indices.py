"""Exact interaction indices over a full game table.

Scores are kept in a dict keyed by coalition mask. All three index kinds
carry the empty-coalition score, which equals the value of the empty
coalition; ``baseline_value`` mirrors it.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np
import scipy.linalg as la

from .core import Coalition, as_mask
from .errors import ConfigurationError, SolverError, ValidationError
from .subsets import moebius, popcounts, superset_zeta, zeta

INDEX_KINDS = ("moebius", "shapley_value", "fsii")

# explicit weighted design matrix up to this many entries, normal equations beyond
DIRECT_SOLVE_LIMIT = 1 << 22


@dataclass(frozen=True, eq=False)
class InteractionValues:
    index_kind: str
    order: int
    n: int
    scores: dict
    baseline_value: float
    player_names: tuple | None = field(default=None)

    def __post_init__(self):
        if self.index_kind not in INDEX_KINDS:
            raise ValidationError(f"unknown index kind {self.index_kind!r}")
        if self.index_kind == "shapley_value" and self.order != 1:
            raise ValidationError("Shapley values have order 1")
        for mask in self.scores:
            if int(mask).bit_count() > self.order:
                raise ValidationError(f"coalition {mask} exceeds order {self.order}")
        if self.player_names is None:
            object.__setattr__(self, "player_names", tuple(f"x{i}" for i in range(self.n)))

    def __getitem__(self, s):
        return self.scores.get(as_mask(s, self.n), 0.0)

    def dense(self):
        """Scores as a length ``2**n`` array (zero above the order)."""
        out = np.zeros(1 << self.n)
        for mask, v in self.scores.items():
            out[mask] = v
        return out

    def first_order(self):
        return np.array([self[1 << i] for i in range(self.n)])

    def items(self):
        """(Coalition, score) pairs ordered by size, then mask."""
        for mask in sorted(self.scores, key=lambda m: (m.bit_count(), m)):
            yield Coalition(mask, self.n), self.scores[mask]


def _check_game(g):
    if g.n < 1:
        raise ValidationError("games need at least one player")


def moebius_transform(g) -> InteractionValues:
    """Möbius interactions ``m(S) = sum_{L ⊆ S} (-1)^{|S|-|L|} v(L)``."""
    _check_game(g)
    m = moebius(g.values)
    return InteractionValues("moebius", g.n, g.n, {mask: float(v) for mask, v in enumerate(m)},
                             float(g.values[0]), g.player_names)


def shapley_values_from_moebius(m: InteractionValues) -> InteractionValues:
    """Split each Möbius interaction equally among its members."""
    if m.index_kind != "moebius":
        raise ValidationError(f"expected Möbius interactions, got {m.index_kind!r}")
    dense = m.dense()
    sizes = popcounts(m.n)
    share = np.divide(dense, sizes, out=np.zeros_like(dense), where=sizes > 0)
    masks = np.arange(1 << m.n)
    phi = [float(share[(masks >> i) & 1 == 1].sum()) for i in range(m.n)]
    return _shapley(m.n, phi, m.baseline_value, m.player_names)


def _shapley(n, phi, empty, names):
    scores = {0: float(empty)}
    scores.update({1 << i: float(p) for i, p in enumerate(phi)})
    return InteractionValues("shapley_value", 1, n, scores, float(empty), names)


def shapley_values_marginal(g) -> InteractionValues:
    """Shapley values as weighted averages of marginal contributions."""
    _check_game(g)
    n, v = g.n, g.values
    masks = np.arange(1 << n)
    sizes = popcounts(n)
    weight = np.array([1.0 / (n * comb(n - 1, t)) for t in range(n)])
    phi = []
    for i in range(n):
        without = masks[(masks >> i) & 1 == 0]
        phi.append(float(np.sum(weight[sizes[without]] * (v[without | (1 << i)] - v[without]))))
    return _shapley(n, phi, v[0], g.player_names)


shapley_values = shapley_values_marginal


def kernel_weights(n):
    """Shapley-kernel weight per coalition size; 0 marks the two constrained sizes."""
    w = np.zeros(n + 1)
    for t in range(1, n):
        w[t] = 1.0 / comb(n - 2, t - 1)
    return w


def _basis(n, k):
    sizes = popcounts(n)
    masks = np.arange(1 << n)
    keep = masks[sizes <= k]
    return keep[np.lexsort((keep, sizes[keep]))]


def _constraints(basis, g):
    c = np.zeros((2, len(basis)))
    c[0, basis == 0] = 1.0
    c[1, :] = 1.0
    return c, np.array([g.values[0], g.values[-1]])


def _solve_direct(g, basis, weights_by_size):
    n = g.n
    sizes = popcounts(n)
    rows = np.arange(1, (1 << n) - 1)
    design = ((rows[:, None] & basis[None, :]) == basis[None, :]).astype(float)
    sw = np.sqrt(weights_by_size[sizes[rows]])
    c, d = _constraints(basis, g)
    particular = la.lstsq(c, d)[0]
    null = la.null_space(c)
    lhs = sw[:, None] * (design @ null)
    rhs = sw * (g.values[rows] - design @ particular)
    z, _, rank, sv = la.lstsq(lhs, rhs, lapack_driver="gelsd")
    if rank < null.shape[1]:
        raise SolverError("singular weighted least-squares system",
                          float(sv[0] / sv[-1]) if sv[-1] > 0 else float("inf"))
    return particular + null @ z


def _solve_normal(g, basis, weights_by_size):
    """Same problem via the Gram matrix, which only depends on |S ∪ S'|."""
    n = g.n
    sizes = popcounts(n)
    gram_of = np.zeros(n + 1)
    for u in range(n + 1):
        gram_of[u] = sum(comb(n - u, t - u) * weights_by_size[t] for t in range(max(u, 1), n))
    union = popcounts(n)[basis[:, None] | basis[None, :]]
    gram = gram_of[union]
    wv = weights_by_size[sizes] * g.values
    rhs = superset_zeta(wv)[basis]
    c, d = _constraints(basis, g)
    particular = la.lstsq(c, d)[0]
    null = la.null_space(c)
    reduced = null.T @ gram @ null
    z, _, rank, sv = la.lstsq(reduced, null.T @ (rhs - gram @ particular), lapack_driver="gelsd")
    if rank < null.shape[1]:
        raise SolverError("singular normal equations", float(sv[0] / sv[-1]) if sv[-1] > 0 else float("inf"))
    return particular + null @ z


def fsii(g, k: int) -> InteractionValues:
    """Faithful Shapley interactions: best k-additive fit under the Shapley kernel.

    The empty and grand coalitions enter as equality constraints; the other
    coalitions are fitted by weighted least squares.
    """
    n = g.n
    if n < 2:
        raise ConfigurationError("FSII needs at least two players")
    if not 1 <= k <= n:
        raise ConfigurationError(f"order k must be in [1, {n}], got {k}")
    basis = _basis(n, k)
    w = kernel_weights(n)
    if (1 << n) * len(basis) <= DIRECT_SOLVE_LIMIT:
        x = _solve_direct(g, basis, w)
    else:
        x = _solve_normal(g, basis, w)
    x[0] = g.values[0]
    scores = {int(mask): float(v) for mask, v in zip(basis, x)}
    return InteractionValues("fsii", k, n, scores, float(g.values[0]), g.player_names)


def reconstruct(phi: InteractionValues, s) -> float:
    """k-additive surrogate value ``sum_{L ⊆ S, |L| <= k} phi(L)``."""
    mask = as_mask(s, phi.n)
    return float(sum(v for m, v in phi.scores.items() if m & mask == m))


def reconstruct_all(phi: InteractionValues) -> np.ndarray:
    return zeta(phi.dense())


@dataclass(frozen=True)
class Faithfulness:
    residual: float
    r2: float

    def __iter__(self):
        return iter((self.residual, self.r2))


def faithfulness(g, phi: InteractionValues, tol=1e-18) -> Faithfulness:
    """Shapley-weighted residual and R² of ``phi`` against ``g``.

    Only coalitions other than the empty and grand one contribute; those two
    are constraints of the fit, not residuals.
    """
    if phi.n != g.n:
        raise ValidationError(f"index over {phi.n} players for a {g.n}-player game")
    n = g.n
    sizes = popcounts(n)
    w = kernel_weights(n)[sizes]
    v = g.values
    resid = float(np.sum(w * (v - reconstruct_all(phi)) ** 2))
    if w.sum() == 0:
        # n == 1: no interior coalitions
        return Faithfulness(resid, 1.0)
    mean = float(np.sum(w * v) / np.sum(w))
    total = float(np.sum(w * (v - mean) ** 2))
    scale = max(1.0, float(np.sum(w * v * v)))
    if total <= tol * scale:
        if resid <= tol * scale:
            return Faithfulness(resid, 1.0)
        raise ValidationError("R² undefined: the game is constant on interior coalitions but the fit is not")
    return Faithfulness(resid, 1.0 - resid / total)


def r2_curve(g, k_max=None):
    """``[(k, F, R²)]`` for FSII of orders 1..k_max."""
    k_max = g.n if k_max is None else k_max
    if not 1 <= k_max <= g.n:
        raise ConfigurationError(f"k_max must be in [1, {g.n}]")
    return [(k, *faithfulness(g, fsii(g, k))) for k in range(1, k_max + 1)]


@dataclass(frozen=True)
class Stratum:
    order: int
    values: np.ndarray
    max: float
    mean: float


def moebius_strata(m: InteractionValues) -> list[Stratum]:
    """Absolute Möbius magnitudes grouped by coalition size 1..n."""
    if m.index_kind != "moebius":
        raise ValidationError(f"expected Möbius interactions, got {m.index_kind!r}")
    dense = np.abs(m.dense())
    sizes = popcounts(m.n)
    out = []
    for order in range(1, m.n + 1):
        vals = dense[sizes == order]
        out.append(Stratum(order, vals, float(vals.max()), float(vals.mean())))
    return out

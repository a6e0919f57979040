"""Shared fixtures and brute-force reference implementations.

The helpers here deliberately avoid the package's transforms and solvers so
they can serve as independent oracles.
"""
import itertools
from math import comb, factorial

import numpy as np
import pytest

from hpi_games import ConfigSpace, Discrete, GameValues


def toy_space(m):
    return ConfigSpace((("lambda1", Discrete((0, 1))), ("lambda2", Discrete(tuple(range(m + 1))))), (0, 0))


def binary2_space():
    return ConfigSpace((("lambda1", Discrete((0, 1))), ("lambda2", Discrete((0, 1)))), (0, 0))


@pytest.fixture(params=[2, 5, 9], ids=lambda m: f"m={m}")
def m(request):
    return request.param


def random_game(rng, n, scale=1.0):
    return GameValues(rng.uniform(-scale, scale, size=1 << n))


def submasks(mask):
    sub = mask
    while True:
        yield sub
        if sub == 0:
            return
        sub = (sub - 1) & mask


def brute_moebius(v):
    n = len(v).bit_length() - 1
    out = np.zeros(len(v))
    for s in range(1 << n):
        out[s] = sum((-1) ** (bin(s).count("1") - bin(l).count("1")) * v[l] for l in submasks(s))
    return out


def brute_shapley(v):
    """Average marginal contribution over all player orderings."""
    n = len(v).bit_length() - 1
    phi = np.zeros(n)
    for perm in itertools.permutations(range(n)):
        mask = 0
        for i in perm:
            phi[i] += v[mask | 1 << i] - v[mask]
            mask |= 1 << i
    return phi / factorial(n)


def kkt_fsii(v, k):
    """FSII by a bordered (KKT) normal-equation solve over explicit loops."""
    n = len(v).bit_length() - 1
    basis = [s for s in range(1 << n) if bin(s).count("1") <= k]
    p = len(basis)
    gram = np.zeros((p, p))
    rhs = np.zeros(p)
    for t in range(1, (1 << n) - 1):
        w = 1.0 / comb(n - 2, bin(t).count("1") - 1)
        row = np.array([1.0 if s & t == s else 0.0 for s in basis])
        gram += w * np.outer(row, row)
        rhs += w * row * v[t]
    kkt = np.zeros((p + 2, p + 2))
    kkt[:p, :p] = gram
    kkt[p, basis.index(0)] = kkt[basis.index(0), p] = 1.0
    kkt[p + 1, :p] = kkt[:p, p + 1] = 1.0
    sol = np.linalg.solve(kkt, np.concatenate([rhs, [v[0], v[-1]]]))
    return dict(zip(basis, sol[:p]))


def discrete_derivative(v, s, t):
    return sum((-1) ** (bin(s).count("1") - bin(l).count("1")) * v[t | l] for l in submasks(s))


def top_order_fsii_closed_form(v, k):
    """Top-order FSII as a weighted average of discrete derivatives (weights sum to 1)."""
    n = len(v).bit_length() - 1
    full = (1 << n) - 1
    pre = factorial(2 * k - 1) / factorial(k - 1) ** 2
    out = {}
    for s in range(1 << n):
        if bin(s).count("1") != k:
            continue
        rest = full ^ s
        total = 0.0
        for t in submasks(rest):
            size = bin(t).count("1")
            w = factorial(k + size - 1) * factorial(n - size - 1) / factorial(n + k - 1)
            total += w * discrete_derivative(v, s, t)
        out[s] = pre * total
    return out


def brute_tunability(space, oracle, baseline, maximize=True):
    """max/min over the full product of Val(lambda (+)_S baseline), by explicit imputation."""
    n = space.n
    reduce = max if maximize else min
    configs = list(itertools.product(*[d.values for d in space.domains]))
    out = np.zeros(1 << n)
    for s in range(1 << n):
        vals = [oracle.evaluate(tuple(c[i] if s >> i & 1 else baseline[i] for i in range(n))) for c in configs]
        out[s] = reduce(vals)
    return out


def brute_sensitivity(space, oracle, baseline):
    n = space.n
    configs = list(itertools.product(*[d.values for d in space.domains]))
    out = np.zeros(1 << n)
    for s in range(1 << n):
        vals = np.array([oracle.evaluate(tuple(c[i] if s >> i & 1 else baseline[i] for i in range(n)))
                         for c in configs])
        out[s] = np.mean((vals - vals.mean()) ** 2)
    return out


def pytest_terminal_summary(terminalreporter):
    rows = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            if rep.when == "call" and "test_acceptance.py::test_criterion_" in rep.nodeid:
                name = rep.nodeid.split("::test_criterion_")[1]
                number, _, title = name.partition("_")
                rows.append((int(number), outcome, title.replace("_", " ")))
    if rows:
        terminalreporter.section("acceptance criteria")
        for number, outcome, title in sorted(rows):
            terminalreporter.write_line(f"criterion {number}: {'PASS' if outcome == 'passed' else 'FAIL'}  {title}")

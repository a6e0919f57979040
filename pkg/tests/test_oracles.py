import math
import threading

import numpy as np
import pytest

from hpi_games import (ConfigurationError, DatasetCollection, FunctionOracle, GameSpec, GameValues,
                       MissingConfigurationError, OracleError, ValidationError, binary_space, fsii,
                       indicator_sum_oracle, moebius_transform, perturb_oracle, play, product_indicator_oracle,
                       random_k_additive_oracle, shapley_values, tabular_oracle_from_file)
from hpi_games.errors import FormatError
from hpi_games.oracles import TabularOracle, write_tabular

from conftest import binary2_space, brute_moebius, toy_space


def test_indicator_sum(m):
    o = indicator_sum_oracle(toy_space(m), (1, m))
    assert o.evaluate((1, m)) == 2
    assert o.evaluate((0, 0)) == 0
    assert o.evaluate((1, 0)) == 1
    with pytest.raises(ConfigurationError):
        indicator_sum_oracle(toy_space(m), (2, 0))


def test_product_indicator():
    o = product_indicator_oracle(binary2_space(), (0, 0))
    assert [o.evaluate(c) for c in [(0, 0), (0, 1), (1, 1)]] == [1, 0, 0]
    with pytest.raises(ConfigurationError):
        product_indicator_oracle(binary2_space(), (0, 5))


def test_batch_matches_evaluate():
    rng = np.random.default_rng(0)
    space = toy_space(5)
    o = indicator_sum_oracle(space, (1, 5))
    batch = [(int(rng.integers(2)), int(rng.integers(6))) for _ in range(50)]
    assert o.batch_evaluate(batch) == [o.evaluate(c) for c in batch]


def test_non_finite_output_is_error():
    o = FunctionOracle(binary2_space(), lambda c: math.nan)
    with pytest.raises(OracleError):
        o.evaluate((0, 0))


@pytest.fixture(params=["csv", "json"])
def table_file(request, tmp_path):
    path = tmp_path / f"table.{request.param}"
    write_tabular(path, binary2_space(), [((0, 0), 0.5), ((1, 1), 0.9)])
    return path


def test_tabular_lookup(table_file):
    space = binary2_space()
    o = tabular_oracle_from_file(table_file, space)
    assert o.evaluate((1, 1)) == 0.9
    with pytest.raises(MissingConfigurationError, match=r"\[0, 1\]"):
        o.evaluate((0, 1))
    o = tabular_oracle_from_file(table_file, space, missing_policy=0.0)
    assert o.evaluate((0, 1)) == 0.0


def test_tabular_csv_layout(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text('lambda2,lambda1,performance\n1,0,0.25\n0,0,0.5\n')
    o = tabular_oracle_from_file(path, binary2_space())
    # columns are matched by name
    assert o.evaluate((0, 1)) == 0.25


def test_tabular_categorical_and_float_round_trip(tmp_path):
    from hpi_games import ConfigSpace, Continuous, Discrete
    space = ConfigSpace((("opt", Discrete(("adam", "sgd"))), ("lr", Continuous(0.0, 1.0))), ("adam", 0.5))
    rows = [(("sgd", 0.1 + 0.2), 0.75), (("adam", 1 / 3), -1.25)]
    for suffix in ("csv", "json"):
        path = tmp_path / f"t.{suffix}"
        write_tabular(path, space, rows)
        o = tabular_oracle_from_file(path, space)
        assert o.evaluate(("sgd", 0.1 + 0.2)) == 0.75
        assert o.evaluate(("adam", 1 / 3)) == -1.25


def test_tabular_errors(tmp_path):
    space = binary2_space()
    bad = tmp_path / "bad.json"
    bad.write_text('{"rows": [{"config": [0, 0], "value": 1.0}, {"config": [0, 7], "value": 2.0}]}')
    with pytest.raises(ValidationError, match=r"row 2: \[0, 7\]"):
        tabular_oracle_from_file(bad, space)
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    with pytest.raises(FormatError):
        tabular_oracle_from_file(broken, space)
    header = tmp_path / "h.csv"
    header.write_text("a,b,score\n0,0,1\n")
    with pytest.raises(FormatError):
        tabular_oracle_from_file(header, space)
    with pytest.raises(ValidationError):
        TabularOracle(space, [((0, 0), 1.0), ((0, 0), 2.0)])


def _table(oracle):
    space = oracle.space
    return np.array([oracle.evaluate(tuple((mask >> i) & 1 for i in range(space.n)))
                     for mask in range(1 << space.n)])


@pytest.mark.parametrize("n,k", [(3, 1), (4, 2), (5, 3), (6, 6)])
def test_k_additive_round_trip(n, k):
    o = random_k_additive_oracle(binary_space(n), k, np.random.default_rng(n * 10 + k))
    m = brute_moebius(_table(o))
    np.testing.assert_allclose(m, o.moebius, atol=1e-12, rtol=0)
    sizes = np.array([bin(s).count("1") for s in range(1 << n)])
    assert np.all(m[sizes > k] == pytest.approx(0.0, abs=1e-12))


def test_k_additive_examples():
    o = random_k_additive_oracle(binary_space(3), 1, 5)
    v = _table(o)
    assert v[0b011] - v[0b001] - v[0b010] + v[0] == pytest.approx(0.0, abs=1e-12)
    o = random_k_additive_oracle(binary_space(4), 4, 5)
    assert len(moebius_transform(GameValues(_table(o))).scores) == 16
    with pytest.raises(ConfigurationError):
        random_k_additive_oracle(binary_space(3), 4, 0)
    with pytest.raises(ConfigurationError):
        random_k_additive_oracle(toy_space(2), 1, 0)


def test_k_additive_fsii_recovers_exactly():
    from hpi_games import faithfulness
    o = random_k_additive_oracle(binary_space(4), 2, 11)
    g = GameValues(_table(o))
    assert faithfulness(g, fsii(g, 2)).r2 == pytest.approx(1.0, abs=1e-9)


def test_perturb_zero_is_identity():
    base = indicator_sum_oracle(toy_space(9), (1, 9))
    p = perturb_oracle(base, 0.0, 1)
    probes = [(a, b) for a in (0, 1) for b in range(10)]
    assert p.batch_evaluate(probes) == base.batch_evaluate(probes)


def test_perturb_bounded_and_deterministic():
    base = indicator_sum_oracle(toy_space(9), (1, 9))
    probes = [(a, b) for a in (0, 1) for b in range(10)]
    p = perturb_oracle(base, 0.1, 7)
    first = [p.evaluate(c) for c in probes]
    second = [p.evaluate(c) for c in reversed(probes)][::-1]
    assert first == second
    assert max(abs(a - b) for a, b in zip(first, base.batch_evaluate(probes))) <= 0.1
    assert len(set(np.round(np.array(first) - base.batch_evaluate(probes), 12))) > 1
    # query order does not change offsets, even across fresh instances
    q = perturb_oracle(base, 0.1, 7)
    assert [q.evaluate(c) for c in reversed(probes)][::-1] == first


def test_perturb_concurrent_calls_agree():
    base = indicator_sum_oracle(toy_space(9), (1, 9))
    p = perturb_oracle(base, 0.2, 3)
    probes = [(a, b) for a in (0, 1) for b in range(10)] * 20
    results = {}

    def work(tid):
        results[tid] = [p.evaluate(c) for c in probes]

    threads = [threading.Thread(target=work, args=(t,)) for t in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert all(r == results[0] for r in results.values())


def test_perturbed_tunability_shapley_within_bound():
    space = toy_space(9)
    base = indicator_sum_oracle(space, (1, 9))
    spec = GameSpec("tunability", space)
    g = play(spec, base)
    gp = play(spec, perturb_oracle(base, 0.05, 42))
    assert np.max(np.abs(gp.values - g.values)) <= 0.05
    diff = shapley_values(gp).first_order() - shapley_values(g).first_order()
    assert np.all(np.abs(diff) <= 0.1)


def test_dataset_collection():
    space = toy_space(2)
    a = indicator_sum_oracle(space, (1, 2), dataset="a")
    b = indicator_sum_oracle(space, (0, 1), dataset="b")
    coll = DatasetCollection([a, b])
    assert coll.labels == ["a", "b"] and len(coll) == 2
    with pytest.raises(ValidationError):
        DatasetCollection([])
    with pytest.raises(ValidationError):
        DatasetCollection([a, indicator_sum_oracle(toy_space(3), (1, 3))])

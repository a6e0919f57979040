import json
from pathlib import Path

import numpy as np
import pytest

from hpi_games import GameValues, binary_space, fsii, moebius_transform, shapley_values
from hpi_games.cli import main
from hpi_games.io import (atomic_write, interaction_dot, interactions_from_dict, interactions_to_dict, load_game,
                          load_interactions, read_dot, read_faithfulness_csv, read_upset_csv, save_game, upset_csv,
                          write_all)
from hpi_games.oracles import write_tabular

from conftest import binary2_space, toy_space


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.setenv("HPI_CACHE_DIR", str(tmp_path / "cache"))
    (tmp_path / "toy.json").write_text(json.dumps(toy_space(9).to_dict()))
    (tmp_path / "binary2.json").write_text(json.dumps(binary2_space().to_dict()))
    return tmp_path


def _run(*argv):
    assert main([str(a) for a in argv]) == 0


# -- file formats -------------------------------------------------------------

def test_game_cache_round_trip(tmp_path):
    g = GameValues([0.1, 1 / 3, 2.0 / 7, 1e-300], kind="sensitivity", baseline=(0, "a"), seed=4,
                   dataset="d", player_names=("p", "q"))
    save_game(g, tmp_path / "g.json")
    back = load_game(tmp_path / "g.json")
    assert back.values.tobytes() == g.values.tobytes()
    assert (back.kind, back.baseline, back.seed, back.dataset, back.player_names) == \
        ("sensitivity", (0, "a"), 4, "d", ("p", "q"))
    d = json.loads((tmp_path / "g.json").read_text())
    assert set(d) >= {"n", "kind", "baseline", "seed", "normalized", "dataset", "values", "player_names"}


@pytest.mark.parametrize("index", ["moebius", "sv", "fsii"])
def test_interaction_round_trips(tmp_path, index):
    g = GameValues(np.random.default_rng(1).normal(size=16), player_names=("a", "b", "c", "d"))
    phi = {"moebius": moebius_transform, "sv": shapley_values, "fsii": lambda g: fsii(g, 2)}[index](g)
    d = interactions_to_dict(phi)
    assert d["index"] == index
    values = [abs(r["value"]) for r in d["scores"]]
    assert values == sorted(values, reverse=True)
    back = interactions_from_dict(json.loads(json.dumps(d)))
    assert back.scores == phi.scores and back.order == phi.order
    (tmp_path / "p.csv").write_text(upset_csv(phi))
    rows = read_upset_csv(tmp_path / "p.csv")
    assert {tuple(m): v for m, v in rows} == {tuple(c.names(phi.player_names)): v for c, v in phi.items()}
    (tmp_path / "p.dot").write_text(interaction_dot(phi))
    nodes, edges = read_dot(tmp_path / "p.dot")
    assert set("abcd") <= set(nodes)


def test_dot_signs_hyperedges_and_threshold(tmp_path):
    g = GameValues(np.zeros(8), player_names=("a", "b", "c"))
    m = np.zeros(8)
    m[1], m[2], m[3], m[7] = 1.0, -0.5, -0.25, 0.75
    from hpi_games.subsets import zeta
    phi = moebius_transform(GameValues(zeta(m), player_names=("a", "b", "c")))
    (tmp_path / "g.dot").write_text(interaction_dot(phi))
    nodes, edges = read_dot(tmp_path / "g.dot")
    assert nodes["a"]["color"] == "red" and nodes["b"]["color"] == "blue"
    assert float(nodes["a"]["width"]) > float(nodes["b"]["width"])
    pair = [e for e in edges if {e[0], e[1]} == {"a", "b"}]
    assert len(pair) == 1 and pair[0][2]["sign"] == "negative"
    assert nodes["axbxc"]["junction"] == "true" and nodes["axbxc"]["sign"] == "positive"
    assert sum(1 for e in edges if e[0] == "axbxc") == 3
    (tmp_path / "t.dot").write_text(interaction_dot(phi, threshold=0.5))
    nodes, edges = read_dot(tmp_path / "t.dot")
    assert "axbxc" in nodes and not any({e[0], e[1]} == {"a", "b"} for e in edges)


def test_write_all_cleans_up_partial_outputs(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    outputs = {tmp_path / "a.json": "{}\n", blocker / "b.json": "{}\n"}
    with pytest.raises(OSError):
        write_all(outputs)
    assert not (tmp_path / "a.json").exists()
    assert sorted(p.name for p in tmp_path.iterdir()) == ["file"]


def test_atomic_write_leaves_no_temp_files(tmp_path):
    atomic_write(tmp_path / "x.txt", "hello")
    assert [p.name for p in tmp_path.iterdir()] == ["x.txt"]


# -- CLI ------------------------------------------------------------------------

def test_cli_game_and_cache_hit(workdir, capsys):
    _run("game", "--space", "toy.json", "--oracle", "indicator-sum", "--game", "tunability", "--mode", "exact",
         "--out", "tun.json")
    out = capsys.readouterr().out
    assert "v(empty) = 0.0" in out and "v(grand) = 2.0" in out and "elapsed" in out
    assert list(load_game("tun.json").values) == [0, 1, 1, 2]
    before = Path("tun.json").read_bytes()
    _run("game", "--space", "toy.json", "--oracle", "indicator-sum", "--game", "tunability", "--mode", "exact",
         "--out", "tun.json")
    assert "cache hit" in capsys.readouterr().out
    assert Path("tun.json").read_bytes() == before
    _run("game", "--space", "toy.json", "--oracle", "indicator-sum", "--game", "tunability", "--force",
         "--out", "tun.json")
    assert "cache hit" not in capsys.readouterr().out


def test_cli_default_cache_dir(workdir, capsys):
    _run("game", "--space", "binary2.json", "--oracle", "product-indicator", "--game", "sensitivity")
    files = list((workdir / "cache").glob("game-*.json"))
    assert len(files) == 1
    assert list(load_game(files[0]).values) == [0, 0.25, 0.25, 0.1875]


def test_cli_explain(workdir, capsys):
    _run("game", "--space", "toy.json", "--oracle", "indicator-sum", "--game", "tunability", "--out", "tun.json")
    _run("explain", "tun.json", "--index", "sv", "--out", "sv.json", "--dot", "sv.dot", "--upset-csv", "sv.csv")
    phi = load_interactions("sv.json")
    assert phi.first_order().tolist() == [1.0, 1.0]
    read_dot("sv.dot")
    read_upset_csv("sv.csv")
    _run("explain", "tun.json", "--index", "fsii", "--order", "2", "--out", "fsii.json")
    assert load_interactions("fsii.json")[3] == pytest.approx(0.0, abs=1e-12)
    _run("game", "--space", "toy.json", "--oracle", "constant", "--oracle-params", '{"value": 3}',
         "--game", "tunability", "--out", "const.json")
    _run("explain", "const.json", "--index", "moebius", "--out", "m.json")
    nonzero = [r for r in json.loads(Path("m.json").read_text())["scores"] if r["value"] != 0]
    assert nonzero == [{"coalition": [], "value": 3.0}]


def test_cli_explain_rejects_bad_order(workdir, capsys):
    _run("game", "--space", "toy.json", "--oracle", "indicator-sum", "--game", "tunability", "--out", "tun.json")
    assert main(["explain", "tun.json", "--index", "fsii", "--order", "3", "--out", "x.json"]) == 1
    assert "order" in capsys.readouterr().err
    assert not Path("x.json").exists()


def test_cli_faithfulness(workdir, capsys):
    (workdir / "bin4.json").write_text(json.dumps(binary_space(4).to_dict()))
    _run("game", "--space", "bin4.json", "--oracle", "k-additive", "--oracle-params", '{"k": 2, "seed": 3}',
         "--game", "ablation", "--target", "[1, 1, 1, 1]", "--out", "k2.json")
    _run("faithfulness", "k2.json", "--out", "f.csv")
    rows = read_faithfulness_csv("f.csv")
    r2 = [r for _, _, r in rows]
    assert [k for k, _, _ in rows] == [1, 2, 3, 4]
    assert r2[1] == pytest.approx(1.0, abs=1e-9) and r2[3] == pytest.approx(1.0, abs=1e-9)
    assert all(b >= a - 1e-9 for a, b in zip(r2, r2[1:]))
    _run("game", "--space", "bin4.json", "--oracle", "k-additive", "--oracle-params", '{"k": 1}',
         "--game", "ablation", "--target", "[1, 1, 1, 1]", "--out", "k1.json")
    _run("faithfulness", "k1.json", "--k-max", "1", "--out", "f1.csv")
    assert read_faithfulness_csv("f1.csv")[0][2] == pytest.approx(1.0, abs=1e-9)


def test_cli_multi(workdir, capsys):
    for i, opt in enumerate(([1, 9], [0, 0], [1, 3])):
        _run("game", "--space", "toy.json", "--oracle", "indicator-sum", "--oracle-params",
             json.dumps({"optimum": opt}), "--game", "tunability", "--dataset", f"d{i}", "--out", f"g{i}.json")
    games = [load_game(f"g{i}.json") for i in range(3)]
    _run("multi", "g0.json", "--out", "one.json")
    assert load_game("one.json").values.tobytes() == games[0].values.tobytes()
    _run("multi", "g0.json", "g1.json", "--out", "two.json")
    assert np.array_equal(load_game("two.json").values, (games[0].values + games[1].values) / 2)
    _run("multi", "g0.json", "g1.json", "g2.json", "--aggregate", "quantile:0.5", "--out", "med.json")
    med = load_game("med.json")
    assert np.array_equal(med.values, np.median(np.stack([g.values for g in games]), axis=0))
    assert med.dataset == "multi(q=0.5)"
    assert load_game("two.json").dataset == "multi(mean)"
    _run("game", "--space", "toy.json", "--oracle", "indicator-sum", "--game", "sensitivity", "--out", "s.json")
    assert main(["multi", "g0.json", "s.json", "--out", "bad.json"]) == 1
    assert "kind" in capsys.readouterr().err


def test_cli_optimizer_bias(workdir, capsys):
    _run("optimizer-bias", "--space", "binary2.json", "--oracle", "product-indicator", "--oracle-params",
         '{"anchor": [1, 1]}', "--optimizer", '{"kind": "independent_tuner", "per_player_budget": 20}',
         "--out", "bias.json")
    g = load_game("bias.json")
    assert g.kind == "optimizer_bias" and g[3] == -1.0


def test_cli_table_oracle(workdir, capsys):
    write_tabular(workdir / "t.csv", binary2_space(), [((0, 0), 0.5), ((1, 1), 0.9)])
    assert main(["game", "--space", "binary2.json", "--table", "t.csv", "--game", "tunability", "--out",
                 "t.json"]) == 1
    assert "[0, 1]" in capsys.readouterr().err
    assert not Path("t.json").exists()
    _run("game", "--space", "binary2.json", "--table", "t.csv", "--missing", "0.0", "--game", "tunability",
         "--out", "t.json")
    assert list(load_game("t.json").values) == [0.5, 0.5, 0.5, 0.9]


def test_cli_errors_exit_nonzero(workdir, capsys):
    assert main(["game", "--space", "missing.json", "--oracle", "constant", "--game", "tunability"]) == 1
    assert main(["explain", "nope.json"]) == 1
    Path("junk.json").write_text("{")
    assert main(["explain", "junk.json"]) == 1


def _manifest(workdir, jobs):
    out = workdir / f"run-{jobs}"
    manifest = {
        "space": "bin6.json",
        "oracle": {"name": "k-additive", "params": {"k": 3, "seed": 5}},
        "game": {"kind": "tunability", "mode": "random_search", "budget": 64},
        "indices": [{"kind": "moebius"}, {"kind": "sv"}, {"kind": "fsii", "order": 2}],
        "faithfulness": 6,
        "out_dir": out.name,
        "seed": 11,
    }
    (workdir / f"m{jobs}.json").write_text(json.dumps(manifest))
    return out


def test_cli_run_manifest_parallel_identical(workdir, capsys):
    (workdir / "bin6.json").write_text(json.dumps(binary_space(6).to_dict()))
    outs = []
    for jobs in (1, 8):
        out = _manifest(workdir, jobs)
        _run("run", f"m{jobs}.json", "--jobs", jobs)
        outs.append(out)
    names = sorted(p.name for p in outs[0].iterdir())
    assert names == sorted(p.name for p in outs[1].iterdir())
    assert {"game.json", "moebius.json", "sv.json", "fsii-k2.json", "fsii-k2.dot", "faithfulness.csv"} <= set(names)
    for name in names:
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes(), name

"""Command-line front end.

Subcommands::

    hpi game            play a game and write its cache file
    hpi optimizer-bias  shorthand for ``game --game optimizer-bias``
    hpi explain         interaction indices from a cache (JSON, DOT, UpSet CSV)
    hpi faithfulness    FSII faithfulness curve as CSV
    hpi multi           aggregate caches across datasets
    hpi run             execute a JSON run manifest end to end
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import games as G
from . import indices as I
from . import io as hio
from .core import ConfigSpace, Discrete
from .errors import ConfigurationError, HPIError, ValidationError
from .optimizers import optimizer_from_dict, optimizer_to_dict
from .oracles import (constant_oracle, indicator_sum_oracle, product_indicator_oracle,
                      random_k_additive_oracle, tabular_oracle_from_file)

BUILTIN_ORACLES = ("indicator-sum", "product-indicator", "k-additive", "constant")
GAME_NAMES = {"ablation": "ablation", "marginal-ablation": "marginal_ablation", "sensitivity": "sensitivity",
              "tunability": "tunability", "worst-case": "worst_case", "optimizer-bias": "optimizer_bias"}


def cache_dir():
    return Path(os.environ.get("HPI_CACHE_DIR", ".hpi_cache"))


@dataclass
class RunManifest:
    """One end-to-end run: space, oracle, game, requested indices, outputs."""

    space_path: Path
    oracle: dict
    game: dict
    indices: list = field(default_factory=list)
    out_dir: Path | None = None
    seed: int = 0
    jobs: int = 1
    faithfulness: int | None = None

    def __post_init__(self):
        self.space_path = Path(self.space_path)
        if not self.space_path.exists():
            raise ValidationError(f"space file {self.space_path} does not exist")
        table = self.oracle.get("table")
        if table is not None and not Path(table).exists():
            raise ValidationError(f"oracle table {table} does not exist")
        if self.jobs < 1:
            raise ConfigurationError("jobs must be >= 1")

    @classmethod
    def load(cls, path, jobs=None):
        path = Path(path)
        d = json.loads(path.read_text())
        root = path.parent

        def rel(p):
            return None if p is None else (root / p if not Path(p).is_absolute() else Path(p))

        oracle = dict(d["oracle"])
        if "table" in oracle:
            oracle["table"] = str(rel(oracle["table"]))
        return cls(space_path=rel(d["space"]), oracle=oracle, game=dict(d["game"]),
                   indices=list(d.get("indices", [])), out_dir=rel(d.get("out_dir", ".")),
                   seed=int(d.get("seed", 0)), jobs=int(jobs or d.get("jobs", 1)),
                   faithfulness=d.get("faithfulness"))


def _last_atoms(space):
    if not all(isinstance(d, Discrete) for d in space.domains):
        raise ConfigurationError("default optimum needs discrete domains; pass it in the oracle params")
    return tuple(d.values[-1] for d in space.domains)


def build_oracle(space, source, seed=0):
    """Oracle from ``{"name": ..., "params": {...}}`` or ``{"table": path, "missing": ...}``."""
    dataset = source.get("dataset")
    if "table" in source:
        missing = source.get("missing", "error")
        return tabular_oracle_from_file(source["table"], space, missing, dataset)
    name = source.get("name")
    params = source.get("params") or {}
    if name == "indicator-sum":
        return indicator_sum_oracle(space, params.get("optimum") or _last_atoms(space), dataset)
    if name == "product-indicator":
        return product_indicator_oracle(space, params.get("anchor") or space.default, dataset)
    if name == "k-additive":
        return random_k_additive_oracle(space, int(params.get("k", 2)), int(params.get("seed", seed)), dataset)
    if name == "constant":
        return constant_oracle(space, float(params.get("value", 0.0)), dataset)
    raise ConfigurationError(f"unknown oracle {name!r}; expected one of {BUILTIN_ORACLES} or a table")


def build_spec(space, game, seed=0):
    kind = GAME_NAMES.get(game["kind"], game["kind"])
    mode = game.get("mode", "exact").replace("-", "_")
    if mode not in ("exact", "monte_carlo", "mc", "random_search"):
        raise ConfigurationError(f"unknown mode {game.get('mode')!r}")
    plan = None
    if kind in ("marginal_ablation", "sensitivity"):
        plan = (G.SamplingPlan.exact() if mode == "exact"
                else G.SamplingPlan.monte_carlo(int(game.get("samples", 10_000)), seed))
    elif kind != "ablation":
        plan = (G.SearchPlan.exact() if mode == "exact"
                else G.SearchPlan.random_search(int(game.get("budget", 10_000)), seed))
    optimizer = game.get("optimizer")
    if optimizer is not None:
        optimizer = optimizer_from_dict(optimizer, list(space.names))
    return G.GameSpec(kind, space, baseline=game.get("baseline"), target=game.get("target"), plan=plan,
                      optimizer=optimizer, reference_size=int(game.get("reference_size", 5)))


def _file_digest(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def spec_hash(space, spec, oracle_source, seed, game_cfg):
    oracle_desc = dict(oracle_source)
    if "table" in oracle_desc:
        oracle_desc["table"] = _file_digest(oracle_desc["table"])
    return hio.fingerprint({
        "space": space.to_dict(),
        "oracle": oracle_desc,
        "kind": spec.kind,
        "plan": None if spec.plan is None else vars(spec.plan),
        "baseline": list(spec.baseline),
        "target": None if spec.target is None else list(spec.target),
        "optimizer": None if spec.optimizer is None else optimizer_to_dict(spec.optimizer),
        "reference_size": spec.reference_size,
        "seed": seed,
        "normalize": bool(game_cfg.get("normalize", False)),
        "dataset": game_cfg.get("dataset"),
    })


def play_manifest_game(m: RunManifest, out_path=None, force=False, log=print):
    """Play (or reuse) the manifest's game; returns (game, path, cache_hit)."""
    space = ConfigSpace.load(m.space_path)
    source = dict(m.oracle)
    if m.game.get("dataset") is not None:
        source.setdefault("dataset", m.game["dataset"])
    spec = build_spec(space, m.game, m.seed)
    key = spec_hash(space, spec, source, m.seed, m.game)
    path = Path(out_path) if out_path else cache_dir() / f"game-{key[:16]}.json"
    if not force:
        hit = hio.cached_game(path, key)
        if hit is not None:
            log(f"cache hit: {path}")
            return hit, path, True
    oracle = build_oracle(space, source, m.seed)
    start = time.perf_counter()
    g = G.play(spec, oracle, jobs=m.jobs)
    if m.game.get("normalize"):
        g = G.normalize_game(g)
    g = g.replace(spec_hash=key, dataset=source.get("dataset"))
    hio.save_game(g, path)
    log(f"v(empty) = {g.empty_value!r}")
    log(f"v(grand) = {g.grand_value!r}")
    log(f"elapsed  = {time.perf_counter() - start:.3f}s")
    log(f"wrote {path}")
    return g, path, False


def compute_index(g, kind, order=None):
    kind = hio.TAG_KINDS.get(kind, kind)
    if kind == "moebius":
        return I.moebius_transform(g)
    if kind == "shapley_value":
        return I.shapley_values(g)
    if kind == "fsii":
        order = g.n if order is None else int(order)
        if not 1 <= order <= g.n:
            raise ConfigurationError(f"order must be in [1, {g.n}], got {order}")
        return I.fsii(g, order)
    raise ConfigurationError(f"unknown index {kind!r}")


def explain_outputs(g, kind, order, out, dot=None, upset=None, threshold=0.0):
    phi = compute_index(g, kind, order)
    outputs = {out: hio.dumps(hio.interactions_to_dict(phi))}
    if dot:
        outputs[dot] = hio.interaction_dot(phi, threshold)
    if upset:
        outputs[upset] = hio.upset_csv(phi)
    return phi, outputs


def run_manifest(m: RunManifest, force=False, log=print):
    out_dir = m.out_dir or Path(".")
    g, _, _ = play_manifest_game(m, out_dir / "game.json", force=force, log=log)
    outputs = {}
    for req in m.indices:
        kind = req["kind"]
        order = req.get("order")
        stem = f"{hio.INDEX_TAGS.get(kind, kind)}" + (f"-k{order}" if order else "")
        _, files = explain_outputs(g, kind, order, out_dir / f"{stem}.json", out_dir / f"{stem}.dot",
                                   out_dir / f"{stem}.csv", float(req.get("threshold", 0.0)))
        outputs.update(files)
    if m.faithfulness:
        outputs[out_dir / "faithfulness.csv"] = hio.faithfulness_csv(I.r2_curve(g, int(m.faithfulness)))
    hio.write_all(outputs)
    for p in outputs:
        log(f"wrote {p}")


# -- argument handling ------------------------------------------------------

def _json_arg(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise argparse.ArgumentTypeError(f"invalid JSON: {exc}") from None


def _common(p):
    p.add_argument("--seed", type=int, default=0, help="seed for sampling plans and random oracles")
    p.add_argument("--jobs", type=int, default=1, help="parallel coalition evaluations")
    p.add_argument("--force", action="store_true", help="recompute even if a matching cache exists")
    p.add_argument("--out", type=Path, default=None, help="output file")


def _game_args(p, fixed_game=None):
    p.add_argument("--space", type=Path, required=True, help="configuration space JSON")
    p.add_argument("--oracle", choices=BUILTIN_ORACLES, default=None)
    p.add_argument("--oracle-params", type=_json_arg, default=None, help='e.g. \'{"optimum": [1, 9]}\'')
    p.add_argument("--table", type=Path, default=None, help="tabular oracle (CSV or JSON)")
    p.add_argument("--missing", default="error", help="'error' or a default value for missing rows")
    if fixed_game is None:
        p.add_argument("--game", choices=sorted(GAME_NAMES), required=True)
    p.add_argument("--mode", choices=("exact", "mc", "random-search"), default="exact")
    p.add_argument("--budget", type=int, default=10_000)
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--baseline", type=_json_arg, default=None)
    p.add_argument("--target", type=_json_arg, default=None)
    p.add_argument("--optimizer", type=_json_arg, default=None, required=fixed_game == "optimizer-bias",
                   help="optimizer spec JSON, e.g. '{\"kind\": \"independent_tuner\", \"per_player_budget\": 50}'")
    p.add_argument("--reference-size", type=int, default=5)
    p.add_argument("--dataset", default=None)
    p.add_argument("--normalize", action="store_true")


def _manifest_from_args(args, game_name):
    if args.table is not None:
        missing = args.missing if args.missing == "error" else float(args.missing)
        source = {"table": str(args.table), "missing": missing}
    elif args.oracle is not None:
        source = {"name": args.oracle, "params": args.oracle_params or {}}
    else:
        raise ConfigurationError("pass --oracle or --table")
    mode = {"mc": "monte_carlo", "random-search": "random_search"}.get(args.mode, args.mode)
    game = {"kind": game_name, "mode": mode, "budget": args.budget, "samples": args.samples,
            "baseline": args.baseline, "target": args.target, "optimizer": args.optimizer,
            "reference_size": args.reference_size, "dataset": args.dataset, "normalize": args.normalize}
    return RunManifest(args.space, source, game, seed=args.seed, jobs=args.jobs)


def cmd_game(args):
    m = _manifest_from_args(args, args.game)
    play_manifest_game(m, args.out, args.force)


def cmd_optimizer_bias(args):
    m = _manifest_from_args(args, "optimizer-bias")
    play_manifest_game(m, args.out, args.force)


def cmd_explain(args):
    g = hio.load_game(args.cache)
    tag = hio.INDEX_TAGS.get(args.index, args.index)
    out = args.out or Path(args.cache).with_name(
        f"{Path(args.cache).stem}-{tag}" + (f"-k{args.order}" if args.order else "") + ".json")
    phi, outputs = explain_outputs(g, args.index, args.order, out, args.dot, args.upset_csv, args.threshold)
    hio.write_all(outputs)
    for c, v in list(hio._ranked(phi))[:10]:
        print(f"{'{' + ', '.join(c.names(phi.player_names)) + '}':<30} {v: .6g}")
    for p in outputs:
        print(f"wrote {p}")


def cmd_faithfulness(args):
    g = hio.load_game(args.cache)
    k_max = args.k_max or g.n
    rows = I.r2_curve(g, k_max)
    out = args.out or Path(args.cache).with_name(f"{Path(args.cache).stem}-faithfulness.csv")
    hio.write_all({out: hio.faithfulness_csv(rows)})
    for k, f, r2 in rows:
        print(f"k={k}  F={f:.6g}  R2={r2:.9f}")
    print(f"wrote {out}")


def cmd_multi(args):
    caches = [hio.load_game(p) for p in args.caches]
    try:
        g = G.multi_dataset_game(caches, args.aggregate)
    except ValidationError as exc:
        raise ValidationError(f"{exc} (caches: {', '.join(map(str, args.caches))})") from None
    out = args.out or cache_dir() / f"multi-{hio.fingerprint(hio.game_to_dict(g))[:16]}.json"
    hio.save_game(g, out)
    print(f"wrote {out}")


def cmd_run(args):
    m = RunManifest.load(args.manifest, jobs=args.jobs)
    run_manifest(m, force=args.force)


def make_parser():
    parser = argparse.ArgumentParser(prog="hpi", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("game", help="play a game and cache its values")
    _common(p)
    _game_args(p)
    p.set_defaults(func=cmd_game)

    p = sub.add_parser("optimizer-bias", help="play the optimizer-bias game")
    _common(p)
    _game_args(p, fixed_game="optimizer-bias")
    p.set_defaults(func=cmd_optimizer_bias)

    p = sub.add_parser("explain", help="compute an interaction index from a game cache")
    _common(p)
    p.add_argument("cache", type=Path)
    p.add_argument("--index", choices=("moebius", "sv", "fsii"), default="sv")
    p.add_argument("--order", type=int, default=None)
    p.add_argument("--dot", type=Path, default=None)
    p.add_argument("--upset-csv", type=Path, default=None)
    p.add_argument("--threshold", type=float, default=0.0, help="drop |value| below this from the DOT graph")
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("faithfulness", help="Shapley-weighted R² of FSII for k = 1..k_max")
    _common(p)
    p.add_argument("cache", type=Path)
    p.add_argument("--k-max", type=int, default=None)
    p.set_defaults(func=cmd_faithfulness)

    p = sub.add_parser("multi", help="aggregate game caches across datasets")
    _common(p)
    p.add_argument("caches", type=Path, nargs="+")
    p.add_argument("--aggregate", default="mean", help="'mean' or 'quantile:q'")
    p.set_defaults(func=cmd_multi)

    p = sub.add_parser("run", help="execute a run manifest")
    _common(p)
    p.add_argument("manifest", type=Path)
    p.set_defaults(func=cmd_run)
    return parser


def main(argv=None):
    parser = make_parser()
    args = parser.parse_args(argv)
    if args.jobs < 1:
        parser.error("--jobs must be >= 1")
    try:
        args.func(args)
    except (HPIError, OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

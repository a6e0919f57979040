"""File formats: game caches, interaction exports, DOT graphs and CSV tables.

JSON is written with sorted keys and Python's shortest round-trip float
repr, so identical inputs give byte-identical files.
"""
from __future__ import annotations

import contextlib
import csv
import hashlib
import io
import json
import os
import re
import tempfile
from pathlib import Path

from .core import Coalition
from .errors import FormatError, ValidationError
from .games import GameValues
from .indices import InteractionValues

INDEX_TAGS = {"moebius": "moebius", "shapley_value": "sv", "fsii": "fsii"}
TAG_KINDS = {v: k for k, v in INDEX_TAGS.items()}


def dumps(obj):
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def fingerprint(obj):
    """Stable hash of a JSON-serializable description."""
    return hashlib.sha256(json.dumps(obj, sort_keys=True).encode()).hexdigest()


def atomic_write(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.chmod(tmp, 0o644)
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(FileNotFoundError):
            os.unlink(tmp)
        raise


def write_all(outputs):
    """Write several ``{path: text}`` files; on failure none of them is left behind."""
    done = []
    try:
        for path, text in outputs.items():
            atomic_write(path, text)
            done.append(Path(path))
    except BaseException:
        for p in done:
            with contextlib.suppress(FileNotFoundError):
                p.unlink()
        raise


# -- game cache -------------------------------------------------------------

def game_to_dict(g: GameValues):
    d = {
        "n": g.n,
        "kind": g.kind,
        "baseline": list(g.baseline) if g.baseline is not None else None,
        "seed": g.seed,
        "normalized": g.normalized,
        "dataset": g.dataset,
        "values": [float(v) for v in g.values],
        "player_names": list(g.player_names),
    }
    if g.spec_hash is not None:
        d["spec_hash"] = g.spec_hash
    return d


def game_from_dict(d) -> GameValues:
    try:
        g = GameValues(d["values"], kind=d["kind"], baseline=d.get("baseline"), seed=d.get("seed"),
                       normalized=bool(d.get("normalized", False)), dataset=d.get("dataset"),
                       player_names=d.get("player_names"), spec_hash=d.get("spec_hash"))
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed game cache: {exc}") from None
    if d.get("n", g.n) != g.n:
        raise FormatError(f"game cache says n={d['n']} but holds {len(g)} values")
    return g


def save_game(g, path):
    atomic_write(path, dumps(game_to_dict(g)))


def load_game(path) -> GameValues:
    try:
        return game_from_dict(json.loads(Path(path).read_text()))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: {exc}") from None


def cached_game(path, spec_hash):
    """The cached game at ``path`` if it exists and was built from ``spec_hash``."""
    path = Path(path)
    if not path.exists():
        return None
    try:
        g = load_game(path)
    except (FormatError, ValidationError):
        return None
    return g if g.spec_hash == spec_hash else None


# -- interaction values -----------------------------------------------------

def _ranked(phi):
    return sorted(phi.items(), key=lambda cs: (-abs(cs[1]), len(cs[0]), cs[0].mask))


def interactions_to_dict(phi: InteractionValues):
    names = phi.player_names
    return {
        "index": INDEX_TAGS[phi.index_kind],
        "order": phi.order,
        "baseline_value": float(phi.baseline_value),
        "player_names": list(names),
        "scores": [{"coalition": c.names(names), "value": float(v)} for c, v in _ranked(phi)],
    }


def interactions_from_dict(d) -> InteractionValues:
    try:
        names = list(d["player_names"])
        scores = {}
        for row in d["scores"]:
            mask = Coalition.from_members([names.index(p) for p in row["coalition"]], len(names)).mask
            scores[mask] = float(row["value"])
        return InteractionValues(TAG_KINDS[d["index"]], int(d["order"]), len(names), scores,
                                 float(d["baseline_value"]), tuple(names))
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed interaction export: {exc}") from None


def load_interactions(path) -> InteractionValues:
    try:
        return interactions_from_dict(json.loads(Path(path).read_text()))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: {exc}") from None


def upset_csv(phi: InteractionValues) -> str:
    """One row per coalition: 0/1 membership per player, then the score."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([*phi.player_names, "value"])
    for c, v in _ranked(phi):
        writer.writerow([int(i in c) for i in range(phi.n)] + [repr(float(v))])
    return buf.getvalue()


def read_upset_csv(path):
    """``[(member names, value)]`` in file order."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][-1] != "value":
        raise FormatError(f"{path}: not an UpSet table")
    names = rows[0][:-1]
    return [([n for n, flag in zip(names, r[:-1]) if flag == "1"], float(r[-1])) for r in rows[1:]]


def _dot_id(text):
    return '"' + str(text).replace("\\", "\\\\").replace('"', '\\"') + '"'


def interaction_dot(phi: InteractionValues, threshold=0.0) -> str:
    """Interaction graph in Graphviz DOT.

    Node widths encode first-order scores. Pairs become edges; larger
    coalitions become a star through a junction node. Red marks positive and
    blue negative scores. Coalitions with ``|value| < threshold`` are omitted
    (nodes always stay).
    """
    names = phi.player_names
    first = phi.first_order()
    scale = max([abs(v) for m, v in phi.scores.items() if m] + [1e-300])
    lines = [f"graph {_dot_id(INDEX_TAGS[phi.index_kind])} {{"]
    for i, name in enumerate(names):
        v = float(first[i]) if phi.order >= 1 else 0.0
        lines.append(f"  {_dot_id(name)} [score={v!r}, sign={'positive' if v >= 0 else 'negative'}, "
                     f"color={'red' if v >= 0 else 'blue'}, width={0.3 + abs(v) / scale!r}];")
    for c, v in sorted(phi.items(), key=lambda cs: (len(cs[0]), cs[0].mask)):
        if len(c) < 2 or abs(v) < threshold:
            continue
        attrs = (f"score={float(v)!r}, sign={'positive' if v >= 0 else 'negative'}, "
                 f"color={'red' if v >= 0 else 'blue'}, penwidth={1.0 + 4.0 * abs(v) / scale!r}")
        members = c.names(names)
        if len(c) == 2:
            lines.append(f"  {_dot_id(members[0])} -- {_dot_id(members[1])} [{attrs}];")
        else:
            hub = "x".join(members)
            lines.append(f"  {_dot_id(hub)} [shape=point, junction=true, {attrs}];")
            for m in members:
                lines.append(f"  {_dot_id(hub)} -- {_dot_id(m)} [{attrs}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


_DOT_NODE = re.compile(r'^\s*"((?:[^"\\]|\\.)*)"\s*\[(.*)\];$')
_DOT_EDGE = re.compile(r'^\s*"((?:[^"\\]|\\.)*)"\s*--\s*"((?:[^"\\]|\\.)*)"\s*\[(.*)\];$')


def _attrs(text):
    return dict(part.strip().split("=", 1) for part in text.split(","))


def read_dot(path):
    """Parse a file written by :func:`interaction_dot` into (nodes, edges)."""
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith("graph ") or lines[-1] != "}":
        raise FormatError(f"{path}: not an interaction graph")
    nodes, edges = {}, []
    for line in lines[1:-1]:
        if m := _DOT_EDGE.match(line):
            edges.append((m[1], m[2], _attrs(m[3])))
        elif m := _DOT_NODE.match(line):
            nodes[m[1]] = _attrs(m[2])
        else:
            raise FormatError(f"{path}: cannot parse {line!r}")
    return nodes, edges


# -- faithfulness -----------------------------------------------------------

def faithfulness_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["k", "F", "R2"])
    for k, f, r2 in rows:
        writer.writerow([k, repr(float(f)), repr(float(r2))])
    return buf.getvalue()


def read_faithfulness_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["k", "F", "R2"]:
        raise FormatError(f"{path}: not a faithfulness table")
    return [(int(k), float(f), float(r2)) for k, f, r2 in rows[1:]]

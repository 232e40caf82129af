"""JSON map documents, bundled corpus, reports and CSV traces."""

from __future__ import annotations

import csv
import json
import os
from importlib import resources
from pathlib import Path

from .errors import StructuralError, ValidationError
from .graph import MarkedGraph
from .graphmap import GraphMap
from .substitution import SubstitutionSystem

CORPUS = ("fib", "fibc", "fibs", "id", "pg1", "fib_inv")


def corpus_path(name: str) -> Path:
    base = resources.files("outdyn") / "corpus"
    stem = Path(name).name
    if not stem.endswith(".json"):
        stem += ".json"
    return Path(str(base / stem))


def resolve(path) -> Path:
    """A filesystem path, falling back to the bundled corpus by basename."""
    p = Path(path)
    if p.exists():
        return p
    q = corpus_path(p.name)
    if q.exists():
        return q
    raise FileNotFoundError(f"no such map file: {path}")


def _require(doc, key, kind, where):
    if key not in doc:
        raise ValidationError(f"{where}: missing key {key!r}", f"{where}/{key}")
    if not isinstance(doc[key], kind):
        raise ValidationError(f"{where}: {key!r} has the wrong type", f"{where}/{key}")
    return doc[key]


def map_from_document(doc: dict, name=None) -> GraphMap:
    if not isinstance(doc, dict):
        raise ValidationError("map document must be a JSON object", "/")
    verts = _require(doc, "vertices", list, "")
    edges = _require(doc, "edges", list, "")
    images = _require(doc, "images", dict, "")
    triples = []
    for i, e in enumerate(edges):
        if not isinstance(e, dict):
            raise ValidationError(f"/edges/{i} must be an object", f"/edges/{i}")
        triples.append((str(_require(e, "id", (str, int), f"/edges/{i}")),
                        _require(e, "from", (str, int), f"/edges/{i}"),
                        _require(e, "to", (str, int), f"/edges/{i}")))
    try:
        g = MarkedGraph(verts, triples, doc.get("marking"), doc.get("generators"))
    except StructuralError as exc:
        raise ValidationError(str(exc), "/edges") from None
    return GraphMap(g, images, strata=doc.get("strata"), fsubgraph=doc.get("fsubgraph"), name=name)


def document_of_map(f: GraphMap) -> dict:
    G = f.graph
    doc = {
        "vertices": list(G.vertices),
        "edges": [{"id": G.names[k], "from": G.o(k), "to": G.t(k)} for k in range(1, G.n_edges + 1)],
        "images": {G.names[k]: G.format(f.images[k]) for k in range(1, G.n_edges + 1)},
        "marking": [G.format(m) for m in G.marking],
        "generators": list(G.generators),
    }
    if f._user_strata is not None:
        doc["strata"] = f._user_strata
    if f.fsubgraph:
        doc["fsubgraph"] = sorted(G.names[e] for e in f.fsubgraph)
    return doc


def load_graph_map(path) -> GraphMap:
    p = resolve(path)
    text = p.read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{p}: line {exc.lineno}: {exc.msg}", exc.lineno) from None
    return map_from_document(doc, name=p.stem)


def dumps_map(f: GraphMap) -> str:
    return json.dumps(document_of_map(f), sort_keys=True, indent=2) + "\n"


def save_graph_map(f: GraphMap, path) -> None:
    Path(path).write_text(dumps_map(f), encoding="utf-8")


def load_substitution(path) -> SubstitutionSystem:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return SubstitutionSystem.from_json(doc)


def export_traces(traces, path, columns=None) -> None:
    from .dynamics import TRACE_COLUMNS
    columns = columns or TRACE_COLUMNS
    rows = [r for t in traces for r in t.rows]
    if not traces or not rows:
        raise ValueError("trace set is empty")
    if hasattr(path, "write"):
        _write_rows(path, rows, columns)
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        _write_rows(fh, rows, columns)


def _write_rows(fh, rows, columns):
    w = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in rows:
        w.writerow({k: _fmt(r.get(k, "")) for k in columns})


def _fmt(v):
    if isinstance(v, float):
        return repr(round(v, 12))
    return v


def threads_from_env(default: int = 1) -> int:
    try:
        return max(1, int(os.environ.get("OD_THREADS", default)))
    except ValueError:
        return default

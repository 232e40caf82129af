"""Graph self-maps: derivative, turns, filtration, strata and PF data."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from math import gcd
from typing import Sequence

import networkx as nx
import numpy as np

from .errors import DomainError, NumericError, StructuralError, ValidationError
from .graph import MarkedGraph, inverse, is_reduced

EG, NEG, ZERO = "EG", "NEG", "ZERO"


@dataclass
class Stratum:
    edges: tuple
    kind: str
    matrix: list
    pf: dict | None = None
    index: int = 0
    inp: tuple | None = None


@dataclass
class PFData:
    lam: float
    right: list
    left: list
    residual: float
    iterations: int
    tol: float = 1e-12


def transition_matrix_of(images: dict, edges: Sequence[int]) -> list:
    pos = {e: i for i, e in enumerate(edges)}
    m = [[0] * len(edges) for _ in edges]
    for i, e in enumerate(edges):
        for x in images[e]:
            j = pos.get(abs(x))
            if j is not None:
                m[i][j] += 1
    return m


def _is_irreducible(m) -> bool:
    n = len(m)
    g = nx.DiGraph()
    g.add_nodes_from(range(n))
    g.add_edges_from((i, j) for i in range(n) for j in range(n) if m[i][j])
    if n == 1:
        return m[0][0] > 0
    return nx.is_strongly_connected(g)


def classify_stratum(matrix) -> str:
    m = [list(map(int, row)) for row in matrix]
    n = len(m)
    if all(x == 0 for row in m for x in row):
        return ZERO
    if not _is_irreducible(m):
        raise ValidationError("filtration not maximal: nonzero reducible transition matrix")
    a = np.array(m, dtype=object)
    prev = np.identity(n, dtype=object)
    cur = a.copy()
    for _ in range(2 * n + 1):
        if cur.sum() > prev.sum():
            return EG
        prev, cur = cur, cur.dot(a)
    return NEG


def pf_data(matrix, tol=1e-12, cap=100_000) -> PFData:
    """Perron-Frobenius eigenvalue and eigenvectors by shifted power iteration.

    The shift by the identity makes an irreducible matrix primitive without
    changing its eigenvectors.
    """
    m = np.array(matrix, dtype=float)
    n = m.shape[0]
    if n == 0:
        raise DomainError("empty matrix")
    if not _is_irreducible(matrix):
        raise DomainError("pf_data needs an irreducible matrix")
    shifted = m + np.identity(n)

    def iterate(a):
        v = np.full(n, 1.0 / n)
        for it in range(1, cap + 1):
            w = a @ v
            w /= w.sum()
            if np.max(np.abs(w - v)) < tol:
                return w, it
            v = w
        return v, cap

    right, it1 = iterate(shifted)
    left, it2 = iterate(shifted.T)
    lam = float((m @ right).sum() / right.sum())
    residual = float(np.max(np.abs(m @ right - lam * right)))
    if max(it1, it2) >= cap and residual > 1e3 * tol:
        raise NumericError("power iteration did not converge", residual)
    return PFData(lam, right.tolist(), left.tolist(), residual, max(it1, it2), tol)


class GraphMap:
    """A homotopy equivalence f: G -> G given by reduced edge images."""

    def __init__(self, graph: MarkedGraph, images: dict, strata=None, fsubgraph=None, name=None):
        self.graph = graph
        self.name = name
        imgs = {}
        for k in range(1, graph.n_edges + 1):
            key = graph.names[k]
            raw = images.get(key, images.get(k))
            if raw is None:
                raise ValidationError(f"no image for edge {key!r}", key)
            path = graph.parse(raw) if isinstance(raw, str) else tuple(raw)
            if not path:
                raise ValidationError(f"edge {key!r} has an empty image", key)
            try:
                graph.check_path(path)
            except StructuralError as exc:
                raise ValidationError(f"image of {key!r} is not a path: {exc}", key) from None
            if not is_reduced(path):
                raise ValidationError(f"image of {key!r} is not reduced", key)
            imgs[k] = path
            imgs[-k] = inverse(path)
        self.images = imgs
        self.vertex_map = {}
        for k in range(1, graph.n_edges + 1):
            for v, w in ((graph.o(k), graph.o(imgs[k][0])), (graph.t(k), graph.t(imgs[k][-1]))):
                if self.vertex_map.setdefault(v, w) != w:
                    raise ValidationError(
                        f"image of {graph.names[k]!r} disagrees with the vertex map at {v!r}",
                        graph.names[k])
        for v in graph.vertices:
            self.vertex_map.setdefault(v, v)
        self.fsubgraph = frozenset(graph.index[e] if isinstance(e, str) else e for e in (fsubgraph or ()))
        self._user_strata = strata
        self._cache = {}
        self.strata = self._build_strata()
        self._height = {}
        for s in self.strata:
            for e in s.edges:
                self._height[e] = s.index

    @classmethod
    def rose(cls, images: dict, name=None, **kw):
        names = list(images)
        g = MarkedGraph(["v"], [(n, "v", "v") for n in names])
        return cls(g, images, name=name, **kw)

    # -- images ----------------------------------------------------------

    def edge_image(self, e: int) -> tuple:
        return self.images[e]

    def image(self, path: Sequence[int]) -> tuple:
        """Tightened image [f(path)]."""
        out = []
        imgs = self.images
        for e in path:
            for x in imgs[e]:
                if out and out[-1] == -x:
                    out.pop()
                else:
                    out.append(x)
        return tuple(out)

    def iterate(self, path: Sequence[int], n: int) -> tuple:
        p = tuple(path)
        for _ in range(n):
            p = self.image(p)
        return p

    def image_circuit(self, circuit):
        from .graph import Circuit, cyclically_reduce_word
        return Circuit(cyclically_reduce_word(self.image(circuit.edges)))

    def power(self, k: int) -> "GraphMap":
        if k < 1:
            raise DomainError("power must be positive")
        key = ("power", k)
        if key not in self._cache:
            if k == 1:
                return self
            imgs = {self.graph.names[e]: self.iterate((e,), k) for e in range(1, self.graph.n_edges + 1)}
            self._cache[key] = GraphMap(self.graph, imgs, fsubgraph=self.fsubgraph,
                                        name=f"{self.name or 'f'}^{k}")
        return self._cache[key]

    def compose(self, other: "GraphMap") -> "GraphMap":
        """self after other, on the same graph."""
        imgs = {self.graph.names[e]: self.image(other.images[e]) for e in range(1, self.graph.n_edges + 1)}
        for k, v in imgs.items():
            if not v:
                raise ValidationError(f"composition collapses edge {k!r}", k)
        return GraphMap(self.graph, imgs)

    # -- derivative and turns -------------------------------------------

    def derivative(self, d: int) -> int:
        return self.images[d][0]

    def turn_legality(self, d1: int, d2: int):
        """Return ``(True, None)`` if legal, else ``(False, k)``."""
        if d1 == d2:
            raise DomainError("degenerate turn")
        if self.graph.o(d1) != self.graph.o(d2):
            raise DomainError("directions do not share an origin")
        seen = set()
        k = 0
        while (d1, d2) not in seen:
            seen.add((d1, d2))
            d1, d2 = self.derivative(d1), self.derivative(d2)
            k += 1
            if d1 == d2:
                return False, k
        return True, None

    def is_legal_turn(self, d1: int, d2: int) -> bool:
        key = ("legal", d1, d2)
        c = self._cache
        if key not in c:
            c[key] = d1 != d2 and self.turn_legality(d1, d2)[0]
        return c[key]

    def illegal_turns(self) -> list:
        g = self.graph
        out = []
        dirs = g.directions()
        for i, d1 in enumerate(dirs):
            for d2 in dirs[i + 1:]:
                if g.o(d1) == g.o(d2) and not self.is_legal_turn(d1, d2):
                    out.append((d1, d2))
        return out

    def periodic_direction_power(self, d: int):
        """Least p >= 1 with Df^p(d) = d, or None if d is not periodic."""
        x = d
        for p in range(1, 2 * self.graph.n_edges + 1):
            x = self.derivative(x)
            if x == d:
                return p
        return None

    # -- filtration ------------------------------------------------------

    def _build_strata(self) -> list:
        g = self.graph
        edges = range(1, g.n_edges + 1)
        if self._user_strata:
            blocks = []
            for blk in self._user_strata:
                blocks.append(tuple(sorted(g.index[e] if isinstance(e, str) else e for e in blk)))
            flat = sorted(e for b in blocks for e in b)
            if flat != list(edges):
                raise ValidationError("supplied strata do not partition the edges")
            level = {e: i for i, b in enumerate(blocks) for e in b}
            for e in edges:
                for x in self.images[e]:
                    if level[abs(x)] > level[e]:
                        raise ValidationError(
                            f"supplied filtration is not f-invariant at edge {g.names[e]!r}", g.names[e])
        else:
            dg = nx.DiGraph()
            dg.add_nodes_from(edges)
            for e in edges:
                for x in self.images[e]:
                    dg.add_edge(e, abs(x))
            cond = nx.condensation(dg)
            members = {c: tuple(sorted(cond.nodes[c]["members"])) for c in cond.nodes}
            order = list(nx.lexicographical_topological_sort(cond.reverse(copy=True),
                                                             key=lambda c: members[c][0]))
            blocks = [members[c] for c in order]
        strata = []
        for i, blk in enumerate(blocks, start=1):
            m = transition_matrix_of(self.images, blk)
            kind = classify_stratum(m)
            pf = None
            if kind != ZERO:
                p = pf_data(m)
                pf = {"lambda": p.lam, "right": p.right, "left": p.left, "residual": p.residual}
            strata.append(Stratum(blk, kind, m, pf, i))
        return strata

    def height(self, e: int) -> int:
        return self._height[abs(e)]

    def stratum_of(self, e: int) -> Stratum:
        return self.strata[self.height(e) - 1]

    def edges_of_kind(self, kind: str) -> list:
        return [e for s in self.strata if s.kind == kind for e in s.edges]

    def transition_matrix(self, stratum) -> list:
        edges = stratum.edges if isinstance(stratum, Stratum) else tuple(stratum)
        return transition_matrix_of(self.images, edges)

    def eg_strata(self) -> list:
        return [s for s in self.strata if s.kind == EG]

    def is_exponentially_growing(self) -> bool:
        return bool(self.eg_strata())

    # -- validation ------------------------------------------------------

    def validate_structure(self, samples=200, seed=0, connect_len=4) -> dict:
        """Advisory report of relative train track clauses (pass/fail + witness)."""
        g = self.graph
        rng = random.Random(seed)
        rep = {}
        wit = None
        for s in self.eg_strata():
            hr = set(s.edges)
            for e in hr:
                for d in (e, -e):
                    if abs(self.derivative(d)) not in hr:
                        wit = g.format((d,))
        rep["rtt1_eg_directions"] = {"pass": wit is None, "witness": wit}

        wit = None
        for s in self.eg_strata():
            hr = set(s.edges)
            for _ in range(samples):
                p = self._random_legal_path(hr, rng.randint(1, 6), rng)
                if p is None:
                    continue
                img = self.image(p)
                if not self._is_r_legal(img, hr):
                    wit = g.format(p)
                    break
        rep["rtt3_legal_images"] = {"pass": wit is None, "witness": wit}

        wit = None
        for s in self.eg_strata():
            hr = set(s.edges)
            lower = {e for t in self.strata[: s.index - 1] for e in t.edges}
            hv = {g.o(e) for e in hr} | {g.t(e) for e in hr}
            if not lower:
                continue
            dirs = [d for d in g.directions() if abs(d) in lower and g.o(d) in hv]
            for length in range(1, connect_len + 1):
                for p in _paths_within(g, lower, length, dirs):
                    if g.t(p[-1]) in hv and not self.image(p):
                        wit = g.format(p)
                        break
                if wit:
                    break
        rep["rtt2_connecting_paths"] = {"pass": wit is None, "witness": wit}

        wit = None
        for s in self.strata:
            if s.kind != NEG:
                continue
            if len(s.edges) != 1:
                wit = ",".join(g.names[e] for e in s.edges)
                break
            e = s.edges[0]
            if self.images[e][0] != e or any(self.height(x) >= s.index for x in self.images[e][1:]):
                wit = g.names[e]
                break
        rep["neg_edge_shape"] = {"pass": wit is None, "witness": wit}

        wit = None
        for s in self.strata:
            if s.kind != ZERO:
                continue
            gr = {e for t in self.strata[: s.index] for e in t.edges}
            comp = _component_edges(g, gr, s.edges[0])
            verts = {g.o(e) for e in comp} | {g.t(e) for e in comp}
            if not comp <= set(s.edges) or len(comp) != len(verts) - 1:
                wit = g.names[s.edges[0]]
                break
        rep["zero_strata_contractible"] = {"pass": wit is None, "witness": wit}

        try:
            from .nielsen import find_inps
            res = find_inps(self)
            counts = {}
            for r in res.records:
                if r.kind == EG:
                    counts[r.height] = counts.get(r.height, 0) + 1
            bad = [h for h, c in counts.items() if c > 1]
            rep["inp_per_eg_stratum"] = {"pass": not bad, "witness": bad or None,
                                         "undecided": len(res.undecided)}
        except Exception as exc:  # advisory report never raises
            rep["inp_per_eg_stratum"] = {"pass": False, "witness": str(exc)}
        rep["ok"] = all(v["pass"] for v in rep.values() if isinstance(v, dict))
        return rep

    def _is_r_legal(self, path, hr) -> bool:
        for i in range(len(path) - 1):
            a, b = -path[i], path[i + 1]
            if abs(a) in hr and abs(b) in hr and not self.is_legal_turn(a, b):
                return False
        return True

    def _random_legal_path(self, hr, length, rng):
        g = self.graph
        dirs = [d for d in g.directions() if abs(d) in hr]
        p = [rng.choice(dirs)]
        while len(p) < length:
            v = g.t(p[-1])
            nxt = [d for d in dirs if g.o(d) == v and d != -p[-1] and self.is_legal_turn(-p[-1], d)]
            if not nxt:
                return None
            p.append(rng.choice(nxt))
        return tuple(p)


def _paths_within(g, allowed, length, start_dirs):
    frontier = [(d,) for d in start_dirs]
    for _ in range(length - 1):
        frontier = [p + (d,) for p in frontier for d in g.directions()
                    if abs(d) in allowed and g.o(d) == g.t(p[-1]) and d != -p[-1]]
    return frontier


def _component_edges(g, allowed, e0):
    comp = {e0}
    stack = [e0]
    while stack:
        e = stack.pop()
        for v in (g.o(e), g.t(e)):
            for f in allowed:
                if f not in comp and v in (g.o(f), g.t(f)):
                    comp.add(f)
                    stack.append(f)
    return comp


def lcm(a: int, b: int) -> int:
    return a * b // gcd(a, b)

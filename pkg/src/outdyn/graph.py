"""Marked graphs, edge paths, circuits and the marking.

Oriented edges are nonzero ints: edge ``i`` read forward is ``i`` and read
backward is ``-i``.  A path is a tuple of such ints.
"""

from __future__ import annotations

import random
from typing import Iterable, Sequence

from .errors import DomainError, StructuralError, ValidationError

Path = tuple


def inverse(path: Sequence[int]) -> Path:
    return tuple(-e for e in reversed(path))


def is_reduced(path: Sequence[int]) -> bool:
    return all(path[i + 1] != -path[i] for i in range(len(path) - 1))


def _free_reduce(path: Iterable[int]) -> list:
    out = []
    for e in path:
        if out and out[-1] == -e:
            out.pop()
        else:
            out.append(e)
    return out


def least_rotation(seq: Sequence[int]) -> int:
    """Booth's algorithm: start index of the lexicographically least rotation."""
    n = len(seq)
    if n == 0:
        return 0
    s = list(seq) + list(seq)
    fail = [-1] * (2 * n)
    k = 0
    for j in range(1, 2 * n):
        sj = s[j]
        i = fail[j - k - 1]
        while i != -1 and sj != s[k + i + 1]:
            if sj < s[k + i + 1]:
                k = j - i - 1
            i = fail[i]
        if sj != s[k + i + 1]:
            if sj < s[k]:
                k = j
            fail[j - k] = -1
        else:
            fail[j - k] = i + 1
    return k


def canonical_cycle(seq: Sequence[int]) -> Path:
    """Least rotation among rotations of ``seq`` and of its inverse."""
    if not seq:
        return ()
    k = least_rotation(seq)
    a = tuple(seq[k:]) + tuple(seq[:k])
    inv = inverse(seq)
    k = least_rotation(inv)
    b = inv[k:] + inv[:k]
    return min(a, b)


def cyclically_reduce_word(word: Sequence[int]) -> Path:
    w = _free_reduce(word)
    i, j = 0, len(w) - 1
    while i < j and w[i] == -w[j]:
        i += 1
        j -= 1
    return tuple(w[i:j + 1])


class Circuit:
    """A cyclically reduced closed path stored in canonical rotation."""

    __slots__ = ("edges",)

    def __init__(self, edges: Sequence[int]):
        if not edges:
            raise DomainError("empty circuit")
        self.edges = canonical_cycle(edges)

    def __len__(self):
        return len(self.edges)

    def __iter__(self):
        return iter(self.edges)

    def __eq__(self, other):
        return isinstance(other, Circuit) and self.edges == other.edges

    def __hash__(self):
        return hash(("circuit", self.edges))

    def __repr__(self):
        return f"Circuit({self.edges})"

    def inverse(self) -> "Circuit":
        return Circuit(inverse(self.edges))


class MarkedGraph:
    """Finite connected graph with a marking by loops at a base vertex.

    ``edges`` is a list of ``(name, origin, terminus)``.  ``marking`` is a list
    of loops (paths) at a common vertex, one per generator; ``generators``
    gives their names.  Without a marking the graph must be a rose and each
    petal is a generator.
    """

    def __init__(self, vertices, edges, marking=None, generators=None):
        self.vertices = list(vertices)
        if len(set(self.vertices)) != len(self.vertices):
            raise StructuralError("duplicate vertex ids")
        vset = set(self.vertices)
        self.names = [None]
        self.index = {}
        self._origin = {}
        for k, (name, o, t) in enumerate(edges, start=1):
            name = str(name)
            if name in self.index:
                raise StructuralError(f"duplicate edge id {name!r}")
            if o not in vset or t not in vset:
                raise StructuralError(f"edge {name!r} has an unknown endpoint")
            self.names.append(name)
            self.index[name] = k
            self._origin[k] = o
            self._origin[-k] = t
        self.n_edges = len(self.names) - 1
        if self.n_edges == 0:
            raise StructuralError("graph has no edges")
        self._check_connected()
        self.rank = self.n_edges - len(self.vertices) + 1
        self.single_char = all(len(n) == 1 for n in self.names[1:])
        if marking is None:
            if len(self.vertices) != 1:
                raise StructuralError("a marking is required unless the graph is a rose")
            marking = [(k,) for k in range(1, self.n_edges + 1)]
            generators = generators or self.names[1:]
        else:
            marking = [self.parse(m) if isinstance(m, str) else tuple(m) for m in marking]
        if len(marking) != self.rank:
            raise ValidationError(
                f"marking has {len(marking)} loops but the graph has rank {self.rank}")
        self.marking = marking
        self.generators = list(generators) if generators else [f"x{i}" for i in range(1, self.rank + 1)]
        if len(self.generators) != self.rank:
            raise ValidationError("generator names do not match the rank")
        self.base = self.o(marking[0][0]) if marking[0] else self.vertices[0]
        for m in marking:
            if not m or not self.is_composable(m) or self.o(m[0]) != self.base or self.t(m[-1]) != self.base:
                raise ValidationError(f"marking loop {self.format(m)!r} is not a loop at the base vertex", m)
        self._weights = None

    # -- basic structure -------------------------------------------------

    def _check_connected(self):
        adj = {v: set() for v in self.vertices}
        for k in range(1, self.n_edges + 1):
            adj[self._origin[k]].add(self._origin[-k])
            adj[self._origin[-k]].add(self._origin[k])
        seen = {self.vertices[0]}
        stack = [self.vertices[0]]
        while stack:
            v = stack.pop()
            for u in adj[v]:
                if u not in seen:
                    seen.add(u)
                    stack.append(u)
        if len(seen) != len(self.vertices):
            raise StructuralError("graph is not connected")

    def o(self, e: int):
        return self._origin[e]

    def t(self, e: int):
        return self._origin[-e]

    def directions(self) -> list:
        out = []
        for k in range(1, self.n_edges + 1):
            out += [k, -k]
        return out

    def edges_at(self, v) -> list:
        return [d for d in self.directions() if self.o(d) == v]

    def is_composable(self, path: Sequence[int]) -> bool:
        return all(self.t(path[i]) == self.o(path[i + 1]) for i in range(len(path) - 1))

    def check_path(self, path: Sequence[int]):
        for e in path:
            if e not in self._origin:
                raise StructuralError(f"unknown edge {e}")
        for i in range(len(path) - 1):
            if self.t(path[i]) != self.o(path[i + 1]):
                raise StructuralError(
                    f"path not composable at position {i}: {self.format(path[i:i + 2])}")

    # -- text encoding ---------------------------------------------------

    def parse(self, word: str) -> Path:
        """Parse ``"ab-a"`` (single-char ids) or ``"e1,e2-"`` into a path."""
        word = word.strip()
        if not word:
            return ()
        if "," in word or not self.single_char:
            toks = [t.strip() for t in word.split(",") if t.strip()]
            out = []
            for tok in toks:
                inv = tok.endswith("-")
                name = tok[:-1] if inv else tok
                if name not in self.index:
                    raise StructuralError(f"unknown edge id {name!r}")
                out.append(-self.index[name] if inv else self.index[name])
            return tuple(out)
        out = []
        for ch in word.replace(" ", ""):
            if ch == "-":
                if not out:
                    raise StructuralError("dangling '-' in word")
                out[-1] = -out[-1]
                continue
            if ch not in self.index:
                raise StructuralError(f"unknown edge id {ch!r}")
            out.append(self.index[ch])
        return tuple(out)

    def format(self, path: Iterable[int]) -> str:
        toks = [self.names[abs(e)] + ("-" if e < 0 else "") for e in path]
        return "".join(toks) if self.single_char else ",".join(toks)

    # -- paths and circuits ----------------------------------------------

    def tighten(self, path: Sequence[int]) -> Path:
        self.check_path(path)
        return tuple(_free_reduce(path))

    def cyclic_reduce(self, path: Sequence[int]) -> Circuit:
        p = self.tighten(path)
        if p and self.o(p[0]) != self.t(p[-1]):
            raise DomainError("not a loop")
        core = cyclically_reduce_word(p)
        if not core:
            raise DomainError("trivial loop carries no circuit")
        return Circuit(core)

    def loop_of_word(self, word: Sequence[int]) -> Path:
        out = []
        for x in word:
            m = self.marking[abs(x) - 1]
            out.extend(m if x > 0 else inverse(m))
        return tuple(_free_reduce(out))

    def circuit_of_word(self, word) -> Circuit:
        if isinstance(word, str):
            word = self.parse_basis(word)
        w = cyclically_reduce_word(word)
        if not w:
            raise DomainError("trivial conjugacy class carries no circuit")
        return self.cyclic_reduce(self.loop_of_word(w))

    # -- basis words -----------------------------------------------------

    def parse_basis(self, word: str) -> Path:
        gens = {g: i for i, g in enumerate(self.generators, start=1)}
        if all(len(g) == 1 for g in self.generators) and "," not in word:
            out = []
            for ch in word.replace(" ", ""):
                if ch == "-":
                    if not out:
                        raise StructuralError("dangling '-' in word")
                    out[-1] = -out[-1]
                elif ch in gens:
                    out.append(gens[ch])
                else:
                    raise StructuralError(f"unknown generator {ch!r}")
            return tuple(out)
        out = []
        for tok in (t.strip() for t in word.split(",") if t.strip()):
            inv = tok.endswith("-")
            name = tok[:-1] if inv else tok
            if name not in gens:
                raise StructuralError(f"unknown generator {name!r}")
            out.append(-gens[name] if inv else gens[name])
        return tuple(out)

    def format_basis(self, word: Iterable[int]) -> str:
        toks = [self.generators[abs(x) - 1] + ("-" if x < 0 else "") for x in word]
        return "".join(toks) if all(len(g) == 1 for g in self.generators) else ",".join(toks)

    def _edge_weights(self) -> dict:
        if self._weights is None:
            self._weights = _fold_marking(self)
        return self._weights

    def basis_word_of_loop(self, path: Sequence[int]) -> Path:
        """Basis word of a closed path (up to conjugacy if not at the base)."""
        w = self._edge_weights()
        out = []
        for e in path:
            out.extend(w[e])
        return tuple(_free_reduce(out))

    def basis_word_of_circuit(self, c: Circuit) -> Path:
        return cyclically_reduce_word(self.basis_word_of_loop(c.edges))

    # -- random generation -----------------------------------------------

    def random_basis_word(self, length: int, rng: random.Random, cyclic=True) -> Path:
        n = self.rank
        while True:
            w = []
            for _ in range(length):
                choices = [x for x in range(-n, n + 1) if x != 0 and (not w or x != -w[-1])]
                w.append(rng.choice(choices))
            if not cyclic or len(w) < 2 or w[0] != -w[-1]:
                return tuple(w)

    def random_circuit(self, length: int, rng: random.Random) -> Circuit:
        while True:
            try:
                return self.circuit_of_word(self.random_basis_word(length, rng))
            except DomainError:
                continue

    def random_path(self, length: int, rng: random.Random, start=None) -> Path:
        dirs = self.directions()
        if start is None:
            e = rng.choice(dirs)
        else:
            e = rng.choice([d for d in dirs if self.o(d) == start])
        path = [e]
        while len(path) < length:
            v = self.t(path[-1])
            nxt = [d for d in dirs if self.o(d) == v and d != -path[-1]]
            path.append(rng.choice(nxt))
        return tuple(path)

    def reduced_paths(self, length: int, start_dirs=None):
        """All reduced paths of exactly ``length`` edges."""
        frontier = [(d,) for d in (start_dirs or self.directions())]
        for _ in range(length - 1):
            nxt = []
            for p in frontier:
                v = self.t(p[-1])
                for d in self.directions():
                    if self.o(d) == v and d != -p[-1]:
                        nxt.append(p + (d,))
            frontier = nxt
        return frontier


def _fold_marking(g: MarkedGraph) -> dict:
    """Invert the marking by Stallings folding with basis-word weights.

    The bouquet of marking loops is folded onto ``g``; the first edge of each
    petal carries its generator.  Gauge moves keep the weight of loops at the
    base vertex unchanged.  Returns a weight (basis word) for every oriented
    edge of ``g``.
    """
    # bouquet edges: [src, dst, label, weight]
    verts = {0: g.base}
    edges = []
    nv = 1
    for i, loop in enumerate(g.marking, start=1):
        prev = 0
        for j, e in enumerate(loop):
            if j == len(loop) - 1:
                nxt = 0
            else:
                nxt = nv
                verts[nv] = g.t(e)
                nv += 1
            edges.append([prev, nxt, e, (i,) if j == 0 else ()])
            prev = nxt
    alive = set(range(len(edges)))

    def inv_w(w):
        return tuple(-x for x in reversed(w))

    def mul(*ws):
        out = []
        for w in ws:
            out.extend(w)
        return tuple(_free_reduce(out))

    def half_edges(v):
        for k in alive:
            s, d, lab, w = edges[k]
            if s == v:
                yield k, lab, d, w
            if d == v:
                yield k, -lab, s, inv_w(w)

    def regauge(v, gauge):
        # weight(s->d) becomes g_s w g_d^-1
        for k in alive:
            s, d, lab, w = edges[k]
            if s == v:
                w = mul(gauge, w)
            if d == v:
                w = mul(w, inv_w(gauge))
            edges[k][3] = w

    def half_weight(k, v, lab):
        s, d, l, w = edges[k]
        if l == lab and s == v:
            return w
        return inv_w(w)

    def gauged(w, v, x, z, gauge):
        gv = gauge if v == z else ()
        gx = gauge if x == z else ()
        return mul(gv, w, inv_w(gx))

    changed = True
    while changed:
        changed = False
        for v in list(verts):
            seen = {}
            for k, lab, other, w in half_edges(v):
                if lab not in seen:
                    seen[lab] = (k, other, w)
                    continue
                k1, x1, w1 = seen[lab]
                k2, x2, w2 = k, other, w
                if x1 != x2:
                    cands = [(x2, mul(inv_w(w1), w2)), (x1, mul(inv_w(w2), w1)),
                             (v, mul(inv_w(w1), w2)), (v, mul(inv_w(w2), w1))]
                    cands.sort(key=lambda c: c[0] == 0)
                    for z, gauge in cands:
                        if gauged(w1, v, x1, z, gauge) == gauged(w2, v, x2, z, gauge):
                            break
                    else:
                        raise ValidationError("marking fold has no consistent gauge")
                    if z != 0 or not gauge:
                        regauge(z, gauge)
                    else:
                        raise ValidationError("marking fold would move the base vertex")
                    keep, drop = (x1, x2) if x2 != 0 else (x2, x1)
                    for kk in alive:
                        if edges[kk][0] == drop:
                            edges[kk][0] = keep
                        if edges[kk][1] == drop:
                            edges[kk][1] = keep
                    del verts[drop]
                    vv = keep if v == drop else v
                else:
                    vv = v
                if half_weight(k1, vv, lab) != half_weight(k2, vv, lab):
                    raise ValidationError("marking is not a homotopy equivalence (type II fold)")
                alive.discard(k2)
                changed = True
                break
            if changed:
                break
    if len(verts) != len(g.vertices) or len(alive) != g.n_edges:
        raise ValidationError("marking is not a homotopy equivalence (folded image is not the graph)")
    weights = {}
    for k in alive:
        s, d, lab, w = edges[k]
        if abs(lab) in weights or -abs(lab) in weights:
            raise ValidationError("marking is not a homotopy equivalence")
        weights[lab] = w
        weights[-lab] = inv_w(w)
    if len(weights) != 2 * g.n_edges:
        raise ValidationError("marking does not cover every edge")
    return weights

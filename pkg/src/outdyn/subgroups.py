"""Stallings core graphs for finitely generated subgroups of a free group.

Labels are nonzero ints (generator ``i`` or its inverse ``-i``).  The same
machinery folds graph-labelled loops when labels are oriented graph edges.
"""

from __future__ import annotations

from typing import Sequence

from .errors import DomainError
from .graph import cyclically_reduce_word, _free_reduce


class CoreGraph:
    """Folded labelled graph.  ``arcs[v]`` maps a label to the target vertex.

    Every edge appears twice: ``v --x--> u`` and ``u --(-x)--> v``.
    """

    def __init__(self, arcs: dict, base, generators=None):
        self.arcs = {v: dict(a) for v, a in arcs.items()}
        self.base = base
        self.generators = list(generators) if generators else []

    @property
    def vertices(self):
        return list(self.arcs)

    def edges(self):
        """Positive-label edges as (src, label, dst)."""
        out = []
        for v, a in self.arcs.items():
            for lab, u in a.items():
                if lab > 0:
                    out.append((v, lab, u))
        return out

    def valence(self, v) -> int:
        return len(self.arcs[v])

    def rank(self) -> int:
        return len(self.edges()) - len(self.arcs) + 1 if self.arcs else 0

    def is_folded(self) -> bool:
        # arcs are dicts keyed by label, so folding means the involution is consistent
        for v, a in self.arcs.items():
            for lab, u in a.items():
                if self.arcs.get(u, {}).get(-lab) != v:
                    return False
        return True

    def is_core(self) -> bool:
        return all(self.valence(v) >= 2 for v in self.arcs if v != self.base)

    def reads(self, word: Sequence[int], start) -> object:
        v = start
        for x in word:
            v = self.arcs[v].get(x)
            if v is None:
                return None
        return v

    def contains(self, word: Sequence[int]) -> bool:
        return self.reads(tuple(_free_reduce(word)), self.base) == self.base

    def canonical(self, root=None) -> tuple:
        """BFS encoding from ``root`` (default the base) with sorted labels."""
        root = self.base if root is None else root
        order = {root: 0}
        queue = [root]
        code = []
        i = 0
        while i < len(queue):
            v = queue[i]
            i += 1
            for lab in sorted(self.arcs[v]):
                u = self.arcs[v][lab]
                if u not in order:
                    order[u] = len(order)
                    queue.append(u)
                code.append((order[v], lab, order[u]))
        return tuple(code)

    def conj_key(self) -> tuple:
        """Key invariant under change of basepoint within the cyclic core."""
        c = cyclic_core(self)
        if not c.arcs:
            return ()
        return min(c.canonical(v) for v in c.arcs)

    def __repr__(self):
        return f"CoreGraph(vertices={len(self.arcs)}, edges={len(self.edges())})"


def _fold(edge_list, base, n_vertices):
    """Fold a graph given as (src, label, dst) edges with positive labels."""
    parent = list(range(n_vertices))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    edges = set(edge_list)
    while True:
        edges = {(find(s), lab, find(d)) for s, lab, d in edges}
        seen = {}
        merged = False
        for s, lab, d in sorted(edges):
            for key, tgt in (((s, lab), d), ((d, -lab), s)):
                other = seen.get(key)
                if other is not None and other != tgt:
                    a, b = sorted((other, tgt))
                    parent[b] = a
                    merged = True
                    break
                seen[key] = tgt
            if merged:
                break
        if not merged:
            break
    arcs = {v: {} for v in range(n_vertices) if find(v) == v}
    for s, lab, d in edges:
        arcs[s][lab] = d
        arcs[d][-lab] = s
    return arcs, find(base)


def _trim(arcs, keep):
    arcs = {v: dict(a) for v, a in arcs.items()}
    changed = True
    while changed:
        changed = False
        for v in list(arcs):
            if v in keep:
                continue
            if len(arcs[v]) <= 1:
                for lab, u in arcs[v].items():
                    arcs[u].pop(-lab, None)
                del arcs[v]
                changed = True
    return arcs


def _relabel(arcs, base):
    ids = {v: i for i, v in enumerate(sorted(arcs, key=lambda x: (x != base, x)))}
    return {ids[v]: {lab: ids[u] for lab, u in a.items()} for v, a in arcs.items()}, ids[base]


def fold_core_graph(generators: Sequence[Sequence[int]]) -> CoreGraph:
    """Folded core graph of the subgroup generated by the given words."""
    if not generators:
        raise DomainError("no generators")
    edges = []
    n = 1
    for w in generators:
        w = tuple(_free_reduce(w))
        if not w:
            raise DomainError("trivial generator")
        prev = 0
        for j, x in enumerate(w):
            nxt = 0 if j == len(w) - 1 else n
            if nxt:
                n += 1
            edges.append((prev, x, nxt) if x > 0 else (nxt, -x, prev))
            prev = nxt
    arcs, base = _fold(edges, 0, n)
    arcs = _trim(arcs, {base})
    arcs, base = _relabel(arcs, base)
    return CoreGraph(arcs, base, [tuple(g) for g in generators])


def cyclic_core(g: CoreGraph) -> CoreGraph:
    arcs = _trim(g.arcs, set())
    if not arcs:
        return CoreGraph({}, None)
    base = g.base if g.base in arcs else min(arcs)
    arcs, base = _relabel(arcs, base)
    return CoreGraph(arcs, base, g.generators)


class SubgroupSystem:
    """A finite list of core graphs (conjugacy classes of subgroups)."""

    def __init__(self, components: Sequence[CoreGraph] = ()):
        comps = []
        for c in components:
            if c.rank() < 1:
                raise DomainError("a component carries the trivial subgroup")
            comps.append(c)
        self.components = comps

    def __len__(self):
        return len(self.components)

    def is_peripheral(self, w: Sequence[int]) -> bool:
        return is_peripheral(self, w)

    def is_malnormal(self) -> bool:
        cores = [cyclic_core(c) for c in self.components]
        for i, a in enumerate(cores):
            for j, b in enumerate(cores):
                if j < i:
                    continue
                comps = _product_components(a, b)
                for verts, arcs in comps:
                    if i == j and any(x == y for x, y in verts):
                        continue  # the diagonal component is A itself
                    if _rank(arcs) > 0:
                        return False
        return True


def is_peripheral(system: SubgroupSystem, w: Sequence[int]) -> bool:
    w = cyclically_reduce_word(w)
    if not w:
        return True
    for c in system.components:
        core = cyclic_core(c)
        for v in core.arcs:
            if core.reads(w, v) == v:
                return True
    return False


def _rank(arcs) -> int:
    n_e = sum(len(a) for a in arcs.values()) // 2
    return n_e - len(arcs) + 1 if arcs else 0


def _product_components(g1: CoreGraph, g2: CoreGraph):
    arcs = {}
    for v1, a1 in g1.arcs.items():
        for v2, a2 in g2.arcs.items():
            common = {lab: (a1[lab], a2[lab]) for lab in a1 if lab in a2}
            arcs[(v1, v2)] = common
    seen = set()
    comps = []
    for start in arcs:
        if start in seen:
            continue
        comp = {start}
        stack = [start]
        seen.add(start)
        while stack:
            v = stack.pop()
            for u in arcs[v].values():
                if u not in seen:
                    seen.add(u)
                    comp.add(u)
                    stack.append(u)
        comps.append((comp, {v: arcs[v] for v in comp}))
    return comps


def intersect_cores(g1: CoreGraph, g2: CoreGraph) -> list:
    """Cores of the nontrivial components of the fiber product."""
    out = []
    for verts, arcs in _product_components(cyclic_core(g1), cyclic_core(g2)):
        trimmed = _trim(arcs, set())
        if not trimmed or _rank(trimmed) < 1:
            continue
        base = min(trimmed)
        arcs2, b = _relabel(trimmed, base)
        out.append(CoreGraph(arcs2, b))
    return out

"""Nielsen paths, the polynomially growing subgraph and the family N_PG."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .errors import DomainError
from .graph import Circuit, inverse
from .graphmap import EG, NEG, ZERO, GraphMap, lcm
from .subgroups import SubgroupSystem, fold_core_graph

FIXED, LINEAR, SUPERLINEAR = "fixed", "linear", "superlinear"


@dataclass(frozen=True)
class InpRecord:
    path: tuple
    height: int
    kind: str
    closed: bool
    period: int = 1
    inverted: bool = False
    edge: int | None = None
    word: tuple | None = None
    exponent: int | None = None


@dataclass
class InpSearchResult:
    records: list
    undecided: list
    fixed_edges: list
    cap: int
    search_power: dict = field(default_factory=dict)

    @property
    def exhaustive_up_to(self):
        return self.cap

    def eg(self) -> list:
        return [r for r in self.records if r.kind == EG]

    def __iter__(self):
        return iter(self.records)

    def __len__(self):
        return len(self.records)


@dataclass
class PGStructure:
    gpg_edges: frozenset
    zero_edges: frozenset
    npg: list
    gstar: dict
    poly_system: SubgroupSystem
    poly_cores_g: list
    inps: InpSearchResult
    neg_classes: dict


def _common_prefix(a, b) -> int:
    n = min(len(a), len(b))
    i = 0
    while i < n and a[i] == b[i]:
        i += 1
    return i


def _extend_image(g: GraphMap, img: list, x: int) -> list:
    out = list(img)
    for y in g.images[x]:
        if out and out[-1] == -y:
            out.pop()
        else:
            out.append(y)
    return out


def _period_bound(f: GraphMap, edges, cap=60) -> int:
    p = 1
    for e in edges:
        for d in (e, -e):
            q = f.periodic_direction_power(d)
            if q:
                p = lcm(p, q)
    return min(p, cap)


def _search_turn(f: GraphMap, g: GraphMap, d1, d2, allowed, hr, cap, node_cap=200_000):
    """Search Nielsen paths alpha^-1 beta of g with alpha, beta starting at d1, d2."""
    G = f.graph
    prune_gap = 2 * max(len(v) for v in g.images.values()) + 2
    found = []
    hit_cap = False

    def extensions(path):
        last = path[-1]
        v = G.t(last)
        out = []
        for x in G.directions():
            if abs(x) not in allowed or G.o(x) != v or x == -last:
                continue
            if abs(last) in hr and abs(x) in hr and not f.is_legal_turn(-last, x):
                continue
            out.append(x)
        return out

    def legal_ok(path, x):
        last = path[-1]
        if x == -last or abs(x) not in allowed or G.o(x) != G.t(last):
            return False
        return not (abs(last) in hr and abs(x) in hr and not f.is_legal_turn(-last, x))

    stack = [((d1,), list(g.images[d1]), (d2,), list(g.images[d2]))]
    nodes = 0
    while stack:
        alpha, A, beta, B = stack.pop()
        nodes += 1
        if nodes > node_cap or len(alpha) + len(beta) > cap:
            hit_cap = True
            continue
        c = _common_prefix(A, B)
        if c == len(A) or c == len(B):
            if c == len(A):
                for x in extensions(alpha):
                    stack.append((alpha + (x,), _extend_image(g, A, x), beta, B))
            else:
                for x in extensions(beta):
                    stack.append((alpha, A, beta + (x,), _extend_image(g, B, x)))
            continue
        Ar, Br = tuple(A[c:]), tuple(B[c:])
        if Ar == alpha and Br == beta:
            found.append((alpha, beta))
            continue
        ra = _relation(alpha, Ar)
        rb = _relation(beta, Br)
        if ra is None or rb is None:
            continue
        if ra == "short":
            if len(Ar) - len(alpha) > prune_gap:
                continue
            x = Ar[len(alpha)]
            if legal_ok(alpha, x):
                stack.append((alpha + (x,), _extend_image(g, A, x), beta, B))
        elif rb == "short":
            if len(Br) - len(beta) > prune_gap:
                continue
            x = Br[len(beta)]
            if legal_ok(beta, x):
                stack.append((alpha, A, beta + (x,), _extend_image(g, B, x)))
        elif ra == "long":
            for x in extensions(alpha):
                stack.append((alpha + (x,), _extend_image(g, A, x), beta, B))
        elif rb == "long":
            for x in extensions(beta):
                stack.append((alpha, A, beta + (x,), _extend_image(g, B, x)))
    return found, hit_cap


def _relation(path, rem):
    """'eq', 'short' (path is a proper prefix of rem), 'long' (rem proper prefix of path) or None."""
    n, m = len(path), len(rem)
    if n == m:
        return "eq" if path == rem else None
    if n < m:
        return "short" if rem[:n] == path else None
    return "long" if path[:m] == rem else None


def nielsen_root(u: Sequence[int]) -> tuple:
    """Root w and exponent d with u = w^d."""
    n = len(u)
    for p in range(1, n + 1):
        if n % p == 0 and tuple(u[:p]) * (n // p) == tuple(u):
            return tuple(u[:p]), n // p
    return tuple(u), 1


def classify_neg_edges(f: GraphMap) -> dict:
    out = {}
    for s in f.strata:
        if s.kind != NEG:
            continue
        for e in s.edges:
            img = f.images[e]
            if img == (e,):
                out[e] = FIXED
            elif img[0] == e and f.image(img[1:]) == img[1:]:
                out[e] = LINEAR
            else:
                out[e] = SUPERLINEAR
    return out


def find_inps(f: GraphMap, cap: int = 10_000) -> InpSearchResult:
    key = ("inps", cap)
    if key in f._cache:
        return f._cache[key]
    G = f.graph
    records, undecided, powers = [], [], {}
    for s in f.eg_strata():
        hr = set(s.edges)
        allowed = {e for t in f.strata[: s.index] for e in t.edges}
        P = _period_bound(f, hr)
        powers[s.index] = P
        g = f.power(P)
        seen = set()
        for d1 in sorted(G.directions()):
            for d2 in sorted(G.directions()):
                if d2 <= d1 or abs(d1) not in hr or abs(d2) not in hr or G.o(d1) != G.o(d2):
                    continue
                if f.is_legal_turn(d1, d2):
                    continue
                found, hit = _search_turn(f, g, d1, d2, allowed, hr, cap)
                for alpha, beta in found:
                    rho = inverse(alpha) + beta
                    if g.image(rho) != rho:
                        continue
                    key2 = min(rho, inverse(rho))
                    if key2 in seen:
                        continue
                    seen.add(key2)
                    period = next(j for j in range(1, P + 1) if f.iterate(rho, j) == rho)
                    records.append(InpRecord(
                        key2, s.index, EG, G.o(rho[0]) == G.t(rho[-1]), period,
                        f.image(key2) == inverse(key2)))
                if hit and not found:
                    undecided.append((s.index, (d1, d2)))
    neg = classify_neg_edges(f)
    for e, cls in sorted(neg.items()):
        if cls == LINEAR:
            w, d = nielsen_root(f.images[e][1:])
            records.append(InpRecord((e,) + w + (-e,), f.height(e), NEG, True,
                                     edge=e, word=w, exponent=d))
    fixed = sorted(e for e, c in neg.items() if c == FIXED)
    res = InpSearchResult(records, undecided, fixed, cap, powers)
    f._cache[key] = res
    return res


def enumerate_npg(f: GraphMap) -> list:
    """EG INPs in both orientations plus monotone-height concatenations."""
    if "npg" in f._cache:
        return f._cache["npg"]
    G = f.graph
    eg = find_inps(f).eg()
    base = []
    for r in eg:
        for p in (r.path, inverse(r.path)):
            base.append((p, r.height, r.closed))
    out = [p for p, _, _ in base]
    nonclosed = [(p, h) for p, h, c in base if not c]

    def grow(seq_paths, heights, direction):
        last = seq_paths[-1]
        for p, h in nonclosed:
            if h in heights:
                continue
            if direction > 0 and h <= heights[-1] or direction < 0 and h >= heights[-1]:
                continue
            if G.t(last[-1]) != G.o(p[0]) or last[-1] == -p[0]:
                continue
            new = seq_paths + [p]
            cat = tuple(x for q in new for x in q)
            out.append(cat)
            grow(new, heights + [h], direction)

    for p, h in nonclosed:
        grow([p], [h], +1)
        grow([p], [h], -1)
    res = sorted(set(out), key=lambda p: (len(p), p))
    f._cache["npg"] = res
    return res


def _parses(path, edge_set, npg) -> bool:
    n = len(path)
    reach = [False] * (n + 1)
    reach[0] = True
    for j in range(n):
        if not reach[j]:
            continue
        if abs(path[j]) in edge_set:
            reach[j + 1] = True
        for q in npg:
            if tuple(path[j:j + len(q)]) == q:
                reach[j + len(q)] = True
    return reach[n]


def compute_gpg(f: GraphMap) -> frozenset:
    if "gpg" in f._cache:
        return f._cache["gpg"]
    npg = enumerate_npg(f)
    S = {e for s in f.strata if s.kind == NEG for e in s.edges if f.images[e][0] == e}
    changed = True
    while changed:
        changed = False
        for e in sorted(S):
            u = f.images[e][1:]
            if u and not _parses(u, S, npg):
                S.discard(e)
                changed = True
    res = frozenset(S)
    f._cache["gpg"] = res
    return res


def zero_edges(f: GraphMap) -> frozenset:
    return frozenset(e for s in f.strata if s.kind == ZERO for e in s.edges)


def build_gstar(f: GraphMap) -> dict:
    """G*: G_PG edges plus one edge per EG INP, with projection to G."""
    G = f.graph
    gpg = compute_gpg(f)
    eg = find_inps(f).eg()
    edges = []
    for e in sorted(gpg):
        edges.append({"id": ("e", e), "src": G.o(e), "dst": G.t(e), "proj": (e,)})
    for i, r in enumerate(eg):
        edges.append({"id": ("inp", i), "src": G.o(r.path[0]), "dst": G.t(r.path[-1]), "proj": r.path})
    verts = sorted({x for e in edges for x in (e["src"], e["dst"])}, key=str)
    parent = {v: v for v in verts}

    def find(x):
        while parent[x] != x:
            x = parent[x]
        return x

    for e in edges:
        a, b = find(e["src"]), find(e["dst"])
        if a != b:
            parent[b] = a
    comps = {}
    for v in verts:
        comps.setdefault(find(v), []).append(v)
    components = []
    for root, vs in comps.items():
        ce = [e for e in edges if find(e["src"]) == root]
        loops = _component_loops(vs[0], ce)
        g_loops = [G.tighten(p) for p in loops]
        g_loops = [p for p in g_loops if p]
        components.append({"vertices": vs, "edges": [e["id"] for e in ce], "root": vs[0],
                           "loops": g_loops})
    return {"vertices": verts, "edges": edges, "components": components}


def _component_loops(root, edges) -> list:
    """Spanning-tree loop generators, returned as projected G-paths at ``root``."""
    tree_path = {root: ()}
    used = set()
    frontier = [root]
    while frontier:
        v = frontier.pop()
        for k, e in enumerate(edges):
            if k in used:
                continue
            if e["src"] == v and e["dst"] not in tree_path:
                tree_path[e["dst"]] = tree_path[v] + e["proj"]
                used.add(k)
                frontier.append(e["dst"])
            elif e["dst"] == v and e["src"] not in tree_path:
                tree_path[e["src"]] = tree_path[v] + inverse(e["proj"])
                used.add(k)
                frontier.append(e["src"])
    loops = []
    for k, e in enumerate(edges):
        if k in used:
            continue
        loops.append(tree_path[e["src"]] + e["proj"] + inverse(tree_path[e["dst"]]))
    return loops


def pg_structure(f: GraphMap) -> PGStructure:
    if "pgs" in f._cache:
        return f._cache["pgs"]
    G = f.graph
    gstar = build_gstar(f)
    cores, cores_g = [], []
    for comp in gstar["components"]:
        if not comp["loops"]:
            continue
        words = [G.basis_word_of_loop(p) for p in comp["loops"]]
        words = [w for w in words if w]
        if words:
            cores.append(fold_core_graph(words))
            cores_g.append(fold_core_graph(comp["loops"]))
    res = PGStructure(compute_gpg(f), zero_edges(f), enumerate_npg(f), gstar,
                      SubgroupSystem(cores), cores_g, find_inps(f), classify_neg_edges(f))
    f._cache["pgs"] = res
    return res


@dataclass
class GrowthResult:
    kind: str
    decomposition: list | None = None

    @property
    def polynomial(self) -> bool:
        return self.kind == "polynomial"


def parse_pg_cyclic(f: GraphMap, edges: Sequence[int]):
    """Cyclic parse into G_PG edges and N_PG paths, or None."""
    gpg = compute_gpg(f)
    npg = enumerate_npg(f)
    w = tuple(edges)
    m = len(w)
    for i in range(m):
        r = w[i:] + w[:i]
        back = [None] * (m + 1)
        back[0] = -1
        for j in range(m):
            if back[j] is None:
                continue
            if abs(r[j]) in gpg and back[j + 1] is None:
                back[j + 1] = (j, (r[j],), "edge")
            for q in npg:
                k = j + len(q)
                if k <= m and back[k] is None and r[j:k] == q:
                    back[k] = (j, q, "npg")
        if back[m] is not None:
            parts = []
            k = m
            while k > 0:
                j, piece, kind = back[k]
                parts.append((kind, piece))
                k = j
            return parts[::-1]
    return None


def classify_growth(f: GraphMap, w) -> GrowthResult:
    if not isinstance(w, Circuit):
        w = f.graph.circuit_of_word(w)
    parts = parse_pg_cyclic(f, w.edges)
    if parts is None:
        return GrowthResult("exponential")
    return GrowthResult("polynomial", parts)


def has_cdc(path: Sequence[int]) -> bool:
    """True if path = c d c with c and d nontrivial."""
    n = len(path)
    for k in range(1, n // 2 + 1):
        if n - 2 * k >= 1 and tuple(path[:k]) == tuple(path[n - k:]):
            return True
    return False

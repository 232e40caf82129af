"""Exponential lengths, splittings, goodness and cancellation constants."""

from __future__ import annotations

import itertools
import random
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .errors import DomainError, ParseFailure
from .graph import Circuit, inverse
from .graphmap import EG, NEG, ZERO, GraphMap
from .nielsen import LINEAR, classify_neg_edges, find_inps, nielsen_root, pg_structure


# -- encoding paths as strings so that the regex engine does the scanning --

def encode(path: Sequence[int]) -> str:
    return "".join(chr(0x100 + 2 * e if e > 0 else 0x101 - 2 * e) for e in path)


def find_all(hay: str, needle: str) -> list:
    """Start indices of (possibly overlapping) occurrences."""
    if not needle:
        return []
    return [m.start() for m in re.finditer("(?=" + re.escape(needle) + ")", hay)]


class PGContext:
    """Precomputed data used by every length computation for one map."""

    def __init__(self, f: GraphMap):
        pgs = pg_structure(f)
        self.f = f
        self.gpg = pgs.gpg_edges
        self.zero = pgs.zero_edges
        self.gprime = self.gpg | self.zero
        self.npg = list(pgs.npg)
        gp = f.fsubgraph
        self.gprime_F = frozenset(e for e in self.gprime if e in gp)
        self.npg_F = [q for q in self.npg if all(abs(x) in gp for x in q)]
        self.npg_codes = [encode(q) for q in self.npg]
        self.npg_F_codes = [encode(q) for q in self.npg_F]
        self.maxlen = max((len(q) for q in self.npg), default=0)

    def exp_weight(self, path, F=False) -> int:
        g = self.gprime_F if F else self.gprime
        return sum(1 for e in path if abs(e) not in g)


def pg_context(f: GraphMap) -> PGContext:
    if "pgctx" not in f._cache:
        f._cache["pgctx"] = PGContext(f)
    return f._cache["pgctx"]


@dataclass
class Decomposition:
    """Maximal N_PG occurrences as (start, length) plus the alternating segments."""
    path: tuple
    blocks: list
    segments: list
    cyclic: bool = False

    @property
    def maximal(self) -> list:
        return [self.path_at(s, n) for s, n in self.blocks]

    def path_at(self, s, n):
        p = self.path
        if not self.cyclic:
            return p[s:s + n]
        m = len(p)
        return tuple(p[(s + i) % m] for i in range(n))


def npg_occurrences(ctx: PGContext, path: Sequence[int], cyclic=False, F=False) -> list:
    codes = ctx.npg_F_codes if F else ctx.npg_codes
    elems = ctx.npg_F if F else ctx.npg
    if not codes:
        return []
    m = len(path)
    if cyclic:
        reps = 1 + (ctx.maxlen + m - 1) // m
        hay = encode(tuple(path) * reps)
    else:
        hay = encode(path)
    occ = set()
    for q, code in zip(elems, codes):
        for s in find_all(hay, code):
            if cyclic and s >= m:
                continue
            occ.add((s, len(q)))
    return sorted(occ)


def maximal_occurrences(occ: list, m: int, cyclic=False) -> list:
    """Drop occurrences strictly contained in another one."""
    if not occ:
        return []
    shifts = (-m, 0, m) if cyclic else (0,)
    out = []
    byend = sorted(occ)
    maxl = max(n for _, n in occ)
    starts = [s for s, _ in byend]
    import bisect
    for s, n in occ:
        contained = False
        for sh in shifts:
            lo = bisect.bisect_left(starts, s - sh - maxl)
            hi = bisect.bisect_right(starts, s - sh)
            for s2, n2 in byend[lo:hi]:
                s2 += sh
                if (s2, n2) != (s, n) and s2 <= s and s + n <= s2 + n2:
                    contained = True
                    break
            if contained:
                break
        if not contained:
            out.append((s, n))
    return out


def exponential_decomposition(f: GraphMap, path, cyclic=None, F=False) -> Decomposition:
    ctx = pg_context(f)
    if isinstance(path, Circuit):
        path, cyclic = path.edges, True
    path = tuple(path)
    cyclic = bool(cyclic)
    m = len(path)
    blocks = maximal_occurrences(npg_occurrences(ctx, path, cyclic, F), m, cyclic)
    segs = []
    if not cyclic:
        pos = 0
        for s, n in blocks:
            if s > pos:
                segs.append(("exp", path[pos:s]))
            segs.append(("npg", path[s:s + n]))
            pos = max(pos, s + n)
        if pos < m:
            segs.append(("exp", path[pos:]))
    else:
        covered = [False] * m
        for s, n in blocks:
            for i in range(n):
                covered[(s + i) % m] = True
        segs = [("npg", tuple(path[(s + i) % m] for i in range(n))) for s, n in blocks]
        run = [path[i] for i in range(m) if not covered[i]]
        if run:
            segs.append(("exp", tuple(run)))
    return Decomposition(path, blocks, segs, cyclic)


def _ell(ctx, path, cyclic, F) -> int:
    d = maximal_occurrences(npg_occurrences(ctx, path, cyclic, F), len(path), cyclic)
    total = ctx.exp_weight(path, F)
    for s, n in d:
        if cyclic:
            m = len(path)
            sub = [path[(s + i) % m] for i in range(n)]
        else:
            sub = path[s:s + n]
        total -= ctx.exp_weight(sub, F)
    return total


def lengths(f: GraphMap, path) -> dict:
    ctx = pg_context(f)
    cyclic = isinstance(path, Circuit)
    p = path.edges if cyclic else tuple(path)
    return {"len": len(p), "ell_exp": _ell(ctx, p, cyclic, False), "ell_F": _ell(ctx, p, cyclic, True)}


def ell_exp(f: GraphMap, path) -> int:
    return lengths(f, path)["ell_exp"]


def ell_F(f: GraphMap, path) -> int:
    return lengths(f, path)["ell_F"]


def relative_lengths(f: GraphMap, gamma, start: int, end: int) -> dict:
    """Exponential length of gamma[start:end] relative to gamma."""
    ctx = pg_context(f)
    cyclic = isinstance(gamma, Circuit)
    p = gamma.edges if cyclic else tuple(gamma)
    if not (0 <= start <= end <= len(p)):
        raise DomainError("subpath positions out of range")
    out = {}
    for key, F in (("ell_exp_rel", False), ("ell_F_rel", True)):
        blocks = maximal_occurrences(npg_occurrences(ctx, p, cyclic, F), len(p), cyclic)
        inside = [False] * len(p)
        for s, n in blocks:
            for i in range(n):
                inside[(s + i) % len(p)] = True
        g = ctx.gprime_F if F else ctx.gprime
        out[key] = sum(1 for i in range(start, end) if not inside[i] and abs(p[i]) not in g)
    return out


# -- splitting verification --------------------------------------------------

VERIFIED, REFUTED, UNKNOWN = "verified", "refuted", "unknown"


@dataclass
class SplitVerdict:
    status: str
    k: int | None = None
    depth: int = 0

    @property
    def verified(self):
        return self.status == VERIFIED


class _Ends:
    """First and last edges of iterated images of pieces, cached."""

    def __init__(self, f: GraphMap, cap: int):
        self.f = f
        self.cap = cap
        self.cache = {}
        v = f._cache.get("rtt_ok")
        if v is None:
            rep = f.validate_structure(samples=50)
            v = rep["rtt1_eg_directions"]["pass"] and rep["rtt3_legal_images"]["pass"]
            f._cache["rtt_ok"] = v
        self.rtt = v
        self.eg_edges = set(f.edges_of_kind(EG))

    def get(self, piece: tuple, k: int):
        """(first, last) of [f^k(piece)], 'empty', or None if beyond the cap."""
        if len(piece) == 1 and self.rtt and abs(piece[0]) in self.eg_edges:
            e = piece[0]
            a, b = e, -e
            for _ in range(k):
                a, b = self.f.derivative(a), self.f.derivative(b)
            return (a, -b)
        lst = self.cache.get(piece)
        if lst is None:
            lst = [(piece[0], piece[-1]) if piece else "empty"]
            self.cache[piece] = lst
            self.cache[("img", piece)] = piece
        while len(lst) <= k:
            cur = self.cache.get(("img", piece))
            if cur is None:
                return None
            nxt = self.f.image(cur)
            if len(nxt) > self.cap:
                self.cache[("img", piece)] = None
                return None
            self.cache[("img", piece)] = nxt
            lst.append((nxt[0], nxt[-1]) if nxt else "empty")
        return lst[k]


def _ends_for(f: GraphMap, cap: int) -> _Ends:
    key = ("ends", cap)
    if key not in f._cache:
        f._cache[key] = _Ends(f, cap)
    return f._cache[key]


def juncture_verdict(f: GraphMap, left: tuple, right: tuple, depth=64, cap=20_000) -> SplitVerdict:
    key = ("junct", left, right, depth, cap)
    c = f._cache
    if key in c:
        return c[key]
    ends = _ends_for(f, cap)
    reached = 0
    verdict = None
    last_pair = (left[-1], right[0])
    for k in range(1, depth + 1):
        a = ends.get(left, k)
        b = ends.get(right, k)
        if a is None or b is None:
            break
        if a == "empty" or b == "empty":
            verdict = SplitVerdict(REFUTED, k, k)
            break
        if a[1] == -b[0]:
            verdict = SplitVerdict(REFUTED, k, k)
            break
        reached = k
        last_pair = (a[1], b[0])
    if verdict is None:
        x, y = last_pair
        if reached >= 1 and x != -y and f.is_legal_turn(-x, y):
            verdict = SplitVerdict(VERIFIED, None, reached)
        else:
            verdict = SplitVerdict(UNKNOWN, None, reached)
    c[key] = verdict
    return verdict


def is_splitting(f: GraphMap, gamma: Sequence[int], breakpoints: Sequence[int], depth=64, cap=20_000) -> SplitVerdict:
    """Check that cutting gamma at the given positions is a splitting."""
    gamma = tuple(gamma)
    cuts = [0] + sorted(set(breakpoints)) + [len(gamma)]
    pieces = [gamma[cuts[i]:cuts[i + 1]] for i in range(len(cuts) - 1)]
    if any(not p for p in pieces):
        raise DomainError("breakpoints must split gamma into nonempty pieces")
    worst = SplitVerdict(VERIFIED, None, depth)
    for a, b in zip(pieces, pieces[1:]):
        v = juncture_verdict(f, a, b, depth, cap)
        if v.status == REFUTED:
            if worst.status != REFUTED or v.k < worst.k:
                worst = v
        elif v.status == UNKNOWN and worst.status == VERIFIED:
            worst = v
        elif v.status == VERIFIED and worst.status == VERIFIED:
            worst = SplitVerdict(VERIFIED, None, min(worst.depth, v.depth))
    return worst


# -- splitting units -----------------------------------------------------------

@dataclass(frozen=True)
class SplittingUnit:
    kind: str  # edge | eg_inp | neg_inp | exceptional | zero | pg_block
    path: tuple
    data: tuple = ()


@dataclass
class AnnotatedPath:
    path: tuple
    units: list
    mode: str = "complete"

    def check(self):
        cat = tuple(x for u in self.units for x in u.path)
        return cat == tuple(self.path)


def _linear_data(f: GraphMap):
    if "lindata" not in f._cache:
        out = {}
        for e, cls in classify_neg_edges(f).items():
            if cls == LINEAR:
                w, d = nielsen_root(f.images[e][1:])
                out[e] = (w, d)
        f._cache["lindata"] = out
    return f._cache["lindata"]


def _unit_candidates(f: GraphMap, path: tuple, j: int, ctx: PGContext, mode: str):
    """Splitting units that start at position j."""
    n = len(path)
    e = path[j]
    out = []
    kind = f.stratum_of(e).kind
    if kind == ZERO:
        k = j
        while k < n and abs(path[k]) in ctx.zero:
            k += 1
        if j == 0 or abs(path[j - 1]) not in ctx.zero:
            out.append(SplittingUnit("zero", path[j:k]))
        return out
    out.append(SplittingUnit("edge", (e,)))
    for q in ctx.npg:
        if path[j:j + len(q)] == q and q in _eg_inp_paths(f):
            out.append(SplittingUnit("eg_inp", q))
    lin = _linear_data(f)
    if e in lin:
        w, _ = lin[e]
        for wdir in (w, inverse(w)):
            k = j + 1
            s = 0
            while path[k:k + len(wdir)] == wdir:
                k += len(wdir)
                s += 1
                if k < n and path[k] < 0 and -path[k] in lin:
                    e2 = -path[k]
                    w2, _ = lin[e2]
                    if w2 == w:
                        sgn = s if wdir == w else -s
                        if e2 == e:
                            out.append(SplittingUnit("neg_inp", path[j:k + 1], (e, w, sgn)))
                        else:
                            out.append(SplittingUnit("exceptional", path[j:k + 1], (e, e2, w, sgn)))
    if mode == "pg_relative":
        k = j
        best = None
        while k < n:
            step = 0
            if abs(path[k]) in ctx.gpg:
                step = 1
            for q in ctx.npg:
                if len(q) > step and path[k:k + len(q)] == q:
                    step = len(q)
            if not step:
                break
            k += step
            best = k
        if best is not None and best - j > 1:
            out.append(SplittingUnit("pg_block", path[j:best]))
    return out


def _eg_inp_paths(f: GraphMap) -> set:
    if "eginp_paths" not in f._cache:
        s = set()
        for r in find_inps(f).eg():
            s.add(r.path)
            s.add(inverse(r.path))
        f._cache["eginp_paths"] = s
    return f._cache["eginp_paths"]


def parse_units(f: GraphMap, path: Sequence[int], mode="complete", depth=64, cap=20_000) -> AnnotatedPath:
    """Fewest-unit parse whose every juncture verifies as a splitting."""
    ctx = pg_context(f)
    path = tuple(path)
    n = len(path)
    if n == 0:
        return AnnotatedPath(path, [], mode)
    cands = [_unit_candidates(f, path, j, ctx, mode) for j in range(n)]
    # best[j][unit] = (count, prev) ; DP over (position, last unit)
    INF = 10 ** 9
    best = [dict() for _ in range(n + 1)]
    for u in cands[0]:
        best[len(u.path)][u] = (1, None)
    for j in range(1, n):
        if not best[j]:
            continue
        for u in cands[j]:
            k = j + len(u.path)
            for prev, (cnt, _) in best[j].items():
                if juncture_verdict(f, prev.path, u.path, depth, cap).status != VERIFIED:
                    continue
                if cnt + 1 < best[k].get(u, (INF,))[0]:
                    best[k][u] = (cnt + 1, (j, prev))
    if not best[n]:
        raise ParseFailure("no verified splitting into units", path)
    u = min(best[n], key=lambda x: best[n][x][0])
    units = []
    k = n
    while True:
        units.append(u)
        cnt, back = best[k][u]
        if back is None:
            break
        k, u = back
    units.reverse()
    return AnnotatedPath(path, units, mode)


def image_splitting(f: GraphMap, ap: AnnotatedPath, depth=64, cap=20_000) -> AnnotatedPath:
    """Unit-by-unit image of a split path."""
    if ap.mode not in ("complete", "pg_relative"):
        raise DomainError("image_splitting needs a complete or pg_relative path")
    units = []
    for u in ap.units:
        img = f.image(u.path)
        if u.kind == "eg_inp":
            units.append(SplittingUnit("eg_inp", img))
        elif u.kind == "neg_inp":
            e, w, s = u.data
            units.append(SplittingUnit("neg_inp", img, (e, w, s)))
        elif u.kind == "exceptional":
            e1, e2, w, p = u.data
            d1 = _linear_data(f)[e1][1]
            d2 = _linear_data(f)[e2][1]
            np_ = p + d1 - d2
            units.append(SplittingUnit("exceptional", img, (e1, e2, w, np_)))
        elif u.kind == "pg_block":
            units.append(SplittingUnit("pg_block", img))
        else:
            try:
                sub = parse_units(f, img, ap.mode, depth, cap)
            except ParseFailure:
                raise ParseFailure(f"image of unit {u.path} does not parse", u) from None
            units.extend(sub.units)
    cat = tuple(x for u in units for x in u.path)
    if cat != f.image(ap.path):
        raise ParseFailure("unit images cancel: input is not split", None)
    return AnnotatedPath(cat, units, ap.mode)


def iterate_until_split(f: GraphMap, path: Sequence[int], kmax=64, mode="complete"):
    p = tuple(path)
    for k in range(kmax + 1):
        try:
            return parse_units(f, p, mode), k
        except ParseFailure:
            pass
        if k < kmax:
            p = f.image(p)
    raise ParseFailure(f"not_yet_split after {kmax} iterations", p)


# -- goodness -------------------------------------------------------------------

def goodness_lower(f: GraphMap, circuit, depth=64, cap=20_000, return_detail=False):
    """Certified lower bound on the goodness of a circuit, as a Fraction."""
    ctx = pg_context(f)
    if not isinstance(circuit, Circuit):
        circuit = Circuit(tuple(circuit))
    p = circuit.edges
    m = len(p)
    denom = _ell(ctx, p, True, False)
    if denom == 0:
        return (Fraction(0), {}) if return_detail else Fraction(0)
    blocks = maximal_occurrences(npg_occurrences(ctx, p, True), m, True)
    inside = [False] * m  # inside[i]: juncture between i and i+1 is interior to a block
    in_block = [False] * m
    for s, n in blocks:
        for i in range(n):
            in_block[(s + i) % m] = True
        for i in range(n - 1):
            inside[(s + i) % m] = True
    cuts = []
    for i in range(m):
        a, b = p[i], p[(i + 1) % m]
        if inside[i]:
            continue
        if abs(a) in ctx.zero and abs(b) in ctx.zero:
            continue
        if a != -b and f.is_legal_turn(-a, b):
            cuts.append(i)
    if not cuts:
        res = Fraction(0)
        return (res, {"pieces": 1}) if return_detail else res

    def piece(c0, c1):
        # edges strictly after cut c0 up to and including c1
        if c1 > c0:
            return p[c0 + 1:c1 + 1]
        return p[c0 + 1:] + p[:c1 + 1]

    good = list(cuts)
    changed = True
    while changed and len(good) > 1:
        changed = False
        keep = []
        k = len(good)
        for idx in range(k):
            left = piece(good[idx - 1], good[idx])
            right = piece(good[idx], good[(idx + 1) % k])
            if juncture_verdict(f, left, right, depth, cap).status == VERIFIED:
                keep.append(good[idx])
            else:
                changed = True
        good = keep
    if len(good) == 1:
        # one cut: the whole circuit is a piece meeting itself
        whole =p[good[0] + 1:] + p[:good[0] + 1]
        if juncture_verdict(f, whole, whole, depth, cap).status != VERIFIED:
            good = []
    if not good:
        res = Fraction(0)
        return (res, {"pieces": 1}) if return_detail else res
    num = 0
    k = len(good)
    for idx in range(k):
        pc = piece(good[idx - 1], good[idx])
        if len(pc) == 1 and abs(pc[0]) not in ctx.gprime:
            pos = good[idx]  # the edge index
            if not in_block[pos]:
                num += 1
    res = Fraction(num, denom)
    return (res, {"pieces": k, "complete_edges": num, "ell_exp": denom}) if return_detail else res


# -- cancellation constant and constants table ------------------------------------

def cancellation(f: GraphMap, r1: Sequence[int], r2: Sequence[int]) -> int:
    """Edges cancelled at the juncture of [f(r1)] and [f(r2)]."""
    a = f.image(r1)
    b = f.image(r2)
    j = 0
    while j < len(a) and j < len(b) and a[-1 - j] == -b[j]:
        j += 1
    return j


def bcc_constant(f: GraphMap, L0: int = 4) -> dict:
    key = ("bcc", L0)
    if key in f._cache:
        return f._cache[key]
    G = f.graph
    paths = []
    for L in range(1, L0 + 1):
        paths += G.reduced_paths(L)
    imgs = {p: f.image(p) for p in paths}
    by_end = {}
    for p in paths:
        by_end.setdefault(G.t(p[-1]), []).append(p)
    best = 0
    witness = None
    for p2 in paths:
        b = imgs[p2]
        for p1 in by_end.get(G.o(p2[0]), []):
            if p1[-1] == -p2[0]:
                continue
            a = imgs[p1]
            j = 0
            while j < len(a) and j < len(b) and a[-1 - j] == -b[j]:
                j += 1
            if j > best:
                best, witness = j, (p1, p2)
    res = {"empirical": best, "stored": 2 * best, "L0": L0, "witness": witness}
    f._cache[key] = res
    return res


@dataclass
class ConstantsTable:
    K: int
    C_f: int
    C: int
    N3K: int
    C_f_empirical: int = 0


def constants(f: GraphMap) -> ConstantsTable:
    if "consts" in f._cache:
        return f._cache["consts"]
    ctx = pg_context(f)
    longest = max([len(q) for q in ctx.npg] + [_longest_zero_path(f, ctx)] + [0])
    K = max(1, 2 * longest)
    b = bcc_constant(f)
    C = max(K, b["stored"])
    N = expansion_power(f, 3 * K)
    res = ConstantsTable(K, b["stored"], C, N, b["empirical"])
    f._cache["consts"] = res
    return res


def _longest_zero_path(f, ctx) -> int:
    if not ctx.zero:
        return 0
    G = f.graph
    best = 0
    for L in range(1, len(ctx.zero) + 1):
        dirs = [d for d in G.directions() if abs(d) in ctx.zero]
        frontier = [(d,) for d in dirs]
        for _ in range(L - 1):
            frontier = [q + (d,) for q in frontier for d in dirs if G.o(d) == G.t(q[-1]) and d != -q[-1]]
        if frontier:
            best = L
    return best


def expansion_power(f: GraphMap, target: int, nmax=200) -> int:
    """Least N with ell_exp([f^N(e)]) >= target for every edge outside G'_PG."""
    ctx = pg_context(f)
    edges = [e for e in range(1, f.graph.n_edges + 1) if e not in ctx.gprime]
    if not edges:
        return 1
    cur = {e: (e,) for e in edges}
    for N in range(1, nmax + 1):
        cur = {e: f.image(p) for e, p in cur.items()}
        if all(_ell(ctx, p, False, False) >= target for p in cur.values()):
            return N
    raise DomainError("no expanding power found (is the map exponentially growing?)")

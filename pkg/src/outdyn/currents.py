"""Rational currents as occurrence-count windows and the functionals on them."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, StructuralError
from .graph import Circuit, inverse, is_reduced
from .graphmap import GraphMap
from .lengths import encode, find_all, pg_context


# -- raw occurrence counting ---------------------------------------------------

def _oriented_count(gamma: tuple, delta, cyclic: bool) -> int:
    if not gamma:
        return 0
    d = tuple(delta)
    m = len(d)
    if not cyclic:
        return len(find_all(encode(d), encode(gamma)))
    reps = 1 + (len(gamma) + m - 1) // m
    return sum(1 for s in find_all(encode(d * reps), encode(gamma)) if s < m)


def count_occurrences(gamma: Sequence[int], delta) -> int:
    """Unoriented count #(gamma, delta) + #(gamma^-1, delta); cyclic for circuits."""
    gamma = tuple(gamma)
    cyclic = isinstance(delta, Circuit)
    d = delta.edges if cyclic else tuple(delta)
    return _oriented_count(gamma, d, cyclic) + _oriented_count(inverse(gamma), d, cyclic)


def window_counts(c, L: int) -> dict:
    """Oriented counts of every length-L subpath.

    A Circuit is read as its periodic word; any other sequence linearly.
    """
    cyclic = isinstance(c, Circuit)
    e = np.asarray(c.edges if cyclic else tuple(c), dtype=np.int64)
    m = len(e)
    if m == 0 or (not cyclic and L > m):
        return {}
    n = int(np.abs(e).max())
    digits = np.where(e > 0, 2 * e - 2, -2 * e - 1)  # 0..2n-1
    base = 2 * n
    if base ** L >= 2 ** 62:
        raise StructuralError("window too long for packed counting")
    starts = m if cyclic else m - L + 1
    codes = np.zeros(starts, dtype=np.int64)
    for j in range(L):
        pos = (np.arange(starts) + j) % m
        codes = codes * base + digits[pos]
    vals, cnt = np.unique(codes, return_counts=True)
    out = {}
    for v, k in zip(vals.tolist(), cnt.tolist()):
        path = []
        for _ in range(L):
            v, r = divmod(v, base)
            path.append(r // 2 + 1 if r % 2 == 0 else -(r // 2 + 1))
        out[tuple(reversed(path))] = k
    return out


# -- the current type -----------------------------------------------------------

@dataclass
class CurrentApprox:
    """Pairings <gamma, mu> on a finite window; stored for both orientations."""
    counts: dict
    window_len: int
    provenance: str = "mix"
    circuit: Circuit | None = None
    path: tuple | None = None
    scale_by: Fraction = Fraction(1)
    meta: dict = field(default_factory=dict)

    def pairing(self, gamma: Sequence[int]) -> Fraction:
        gamma = tuple(gamma)
        if gamma in self.counts:
            return self.counts[gamma]
        src = self.circuit if self.circuit is not None else self.path
        if src is not None:
            v = Fraction(count_occurrences(gamma, src)) * self.scale_by
            self.counts[gamma] = self.counts[inverse(gamma)] = v
            return v
        raise StructuralError(f"path {gamma} is outside the window")

    def __add__(self, other: "CurrentApprox") -> "CurrentApprox":
        keys = set(self.counts) & set(other.counts)
        return CurrentApprox({k: self.counts[k] + other.counts[k] for k in keys},
                             min(self.window_len, other.window_len), "mix")

    def scale(self, c) -> "CurrentApprox":
        c = Fraction(c)
        if c < 0:
            raise DomainError("currents are nonnegative")
        return CurrentApprox({k: v * c for k, v in self.counts.items()}, self.window_len, "mix")

    __rmul__ = scale

    def is_zero(self) -> bool:
        return all(v == 0 for v in self.counts.values())


def window_paths(f: GraphMap, window_len: int) -> list:
    G = f.graph
    out = []
    for L in range(1, window_len + 1):
        out += G.reduced_paths(L)
    return out


def _extra_paths(f: GraphMap) -> list:
    pp = npg_plusplus(f)
    extra = set()
    for fam in (pp.gamma_all, pp.gamma_all_F):
        for g in fam:
            extra.add(g)
            info = pp.table[g]
            for key in ("inp", "left", "right", "lr"):
                extra.update(info[key])
    return sorted(extra, key=lambda p: (len(p), p))


def auto_window(f: GraphMap, requested: int = 0) -> int:
    longest = max([len(p) for p in _extra_paths(f)] + [0])
    return max(2, requested, min(longest, 4))


def _window_current(f: GraphMap, src, L: int, scale=Fraction(1)) -> dict:
    G = f.graph
    counts = {}
    for k in range(1, L + 1):
        wc = window_counts(src, k)
        for p in G.reduced_paths(k):
            counts[p] = Fraction(wc.get(p, 0) + wc.get(inverse(p), 0)) * scale
    for p in _extra_paths(f):
        if p not in counts:
            counts[p] = counts[inverse(p)] = Fraction(count_occurrences(p, src)) * scale
    return counts


def rational_current(f: GraphMap, w, window_len: int = 0) -> CurrentApprox:
    """eta_[w] on the window; w is a Circuit, a basis word string or a basis word."""
    G = f.graph
    if isinstance(w, str):
        w = G.circuit_of_word(G.parse_basis(w))
    elif not isinstance(w, Circuit):
        w = G.circuit_of_word(tuple(w))
    L = auto_window(f, window_len)
    return CurrentApprox(_window_current(f, w, L), L, "rational", w)


def path_current(f: GraphMap, path: Sequence[int], window_len: int = 0, scale=Fraction(1)) -> CurrentApprox:
    """Occurrence counts along a finite path, times ``scale``."""
    L = auto_window(f, window_len)
    path = tuple(path)
    return CurrentApprox(_window_current(f, path, L, Fraction(scale)), L, "iterate",
                         path=path, scale_by=Fraction(scale))


# -- N_PG^{++} ---------------------------------------------------------------------

def _contains(big: tuple, small: tuple) -> bool:
    return len(find_all(encode(big), encode(small))) > 0


def _occurrences_both(big: tuple, small: tuple) -> int:
    n = len(find_all(encode(big), encode(small)))
    inv = inverse(small)
    if inv != small:
        n += len(find_all(encode(big), encode(inv)))
    return n


def plusplus_table(family: Sequence[tuple], inp_units: Iterable[tuple] = ()) -> dict:
    """Minimal strictly containing elements of ``family`` for each member, partitioned."""
    fam = [tuple(g) for g in family]
    fset = set(fam)
    units = set(tuple(u) for u in inp_units)
    table = {}
    for g in fam:
        sup = [h for h in fam if len(h) > len(g) and _contains(h, g)]
        minimal = [h for h in sup
                   if not any(len(g) < len(k) < len(h) and _contains(k, g) and _contains(h, k) for k in sup)]
        inp, left, right = [], [], []
        for h in minimal:
            if h in units and h != g:
                inp.append(h)
            elif h[-len(g):] == g and h[:-len(g)] in fset:
                left.append(h)
            elif h[:len(g)] == g and h[len(g):] in fset:
                right.append(h)
            else:
                inp.append(h)
        lr = []
        for h1 in left:
            for h2 in right:
                p = h1 + h2[len(g):]
                if is_reduced(p):
                    lr.append(p)
        table[g] = {"inp": inp, "left": left, "right": right, "lr": lr}
    return table


@dataclass
class NpgPlusPlus:
    table: dict
    gamma_all: list
    gamma_all_F: list
    table_F: dict = field(default_factory=dict)


def npg_plusplus(f: GraphMap) -> NpgPlusPlus:
    if "npgpp" in f._cache:
        return f._cache["npgpp"]
    from .lengths import _eg_inp_paths
    ctx = pg_context(f)
    units = _eg_inp_paths(f)
    t = plusplus_table(ctx.npg, units)
    tF = plusplus_table(ctx.npg_F, units)
    res = NpgPlusPlus(t, list(ctx.npg), list(ctx.npg_F), tF)
    f._cache["npgpp"] = res
    return res


# -- functionals -------------------------------------------------------------------

def _bracket_term(mu: CurrentApprox, g: tuple, info: dict) -> Fraction:
    v = mu.pairing(g)
    for h in info["inp"] + info["left"] + info["right"]:
        v -= mu.pairing(h) * _occurrences_both(h, g)
    for h in info["lr"]:
        v += mu.pairing(h)
    return v


def _edge_sum(f: GraphMap, mu: CurrentApprox, excluded) -> Fraction:
    total = Fraction(0)
    for e in range(1, f.graph.n_edges + 1):
        if e not in excluded:
            total += mu.pairing((e,)) + mu.pairing((-e,))
    return total


def psi0_prime(f: GraphMap, mu: CurrentApprox) -> Fraction:
    ctx = pg_context(f)
    pp = npg_plusplus(f)
    total = Fraction(0)
    for g in ctx.npg:
        total += _bracket_term(mu, g, pp.table[g]) * ctx.exp_weight(g)
    return total


def current_functionals(f: GraphMap, mu: CurrentApprox) -> dict:
    ctx = pg_context(f)
    pp = npg_plusplus(f)
    norm = _edge_sum(f, mu, ())
    psi0 = (_edge_sum(f, mu, ctx.gprime) - psi0_prime(f, mu)) / 2
    normF = _edge_sum(f, mu, ctx.gprime_F)
    for g in ctx.npg_F:
        # weighted by the F-relative exponential edges of g
        normF -= _bracket_term(mu, g, pp.table_F[g]) * ctx.exp_weight(g, F=True)
    normF /= 2
    return {"norm": norm, "psi0": psi0, "norm_F": normF}


def psi0_edge_terms(f: GraphMap, mu: CurrentApprox) -> dict:
    """Per oriented edge summand of Psi_0 before halving."""
    ctx = pg_context(f)
    pp = npg_plusplus(f)
    out = {}
    for e in [x for k in range(1, f.graph.n_edges + 1) for x in (k, -k)]:
        if abs(e) in ctx.gprime:
            continue
        v = mu.pairing((e,))
        for g in ctx.npg:
            n = sum(1 for x in g if x == e)
            if n:
                v -= _bracket_term(mu, g, pp.table[g]) * n
        out[e] = v
    return out


def in_kpg(f: GraphMap, mu: CurrentApprox) -> bool:
    return current_functionals(f, mu)["psi0"] == 0


def freq_distance(f: GraphMap, mu: CurrentApprox, nu: CurrentApprox, window=None) -> float:
    """sup over window paths of the gap between F-normalized pairings."""
    a = current_functionals(f, mu)["norm_F"]
    b = current_functionals(f, nu)["norm_F"]
    if a == 0 or b == 0:
        raise DomainError("zero current has no projective class")
    if window is None:
        window = min(mu.window_len, nu.window_len)
    paths = window_paths(f, window) if isinstance(window, int) else [tuple(p) for p in window]
    best = 0.0
    for p in paths:
        d = abs(float(mu.pairing(p) / a - nu.pairing(p) / b))
        best = max(best, d)
    return best

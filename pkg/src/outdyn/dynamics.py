"""Attracting currents, North-South experiments, goodness of currents and length audits."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.optimize import nnls

from .currents import (CurrentApprox, current_functionals, freq_distance, path_current,
                       rational_current, window_paths)
from .errors import CapExhausted, DomainError, ValidationError
from .graph import Circuit, inverse
from .graphmap import ZERO, GraphMap
from .lengths import (SplittingUnit, bcc_constant, constants, expansion_power, goodness_lower,
                      juncture_verdict, lengths, pg_context, VERIFIED)
from .nielsen import pg_structure
from .subgroups import is_peripheral


# -- expanding units ---------------------------------------------------------------

def _periodic_power(f: GraphMap, d: int):
    """Least k <= #directions with Df^k(d) == d, else None."""
    x = d
    for k in range(1, 2 * f.graph.n_edges + 1):
        x = f.derivative(x)
        if x == d:
            return k
    return None


def expanding_units(f: GraphMap) -> list:
    """One oriented edge per edge outside G'_PG whose initial direction is periodic.

    Zero-stratum edges whose iterates pick up exponential length within eight
    steps are included as ZeroPath units.
    """
    ctx = pg_context(f)
    out = []
    for e in range(1, f.graph.n_edges + 1):
        if e in ctx.gprime and e not in ctx.zero:
            continue
        for sigma in (e, -e):
            k = _periodic_power(f, sigma)
            if k is None:
                continue
            if e in ctx.zero:
                p = (sigma,)
                for _ in range(8):
                    p = f.image(p)
                if not p or lengths(f, p)["ell_exp"] == 0:
                    break
                out.append(SplittingUnit("zero", (sigma,), (k,)))
            else:
                out.append(SplittingUnit("edge", (sigma,), (k,)))
            break
    return out


# -- attracting currents ----------------------------------------------------------------

def approx_attracting_current(f: GraphMap, sigma, n: int | None = None, window: int = 3,
                              max_len: int = 200_000, cap: int = 10 ** 7) -> CurrentApprox:
    """Frequencies along [g^n(sigma)] with g the power of f fixing sigma's direction."""
    if isinstance(sigma, SplittingUnit):
        sigma = sigma.path
    sigma = tuple(sigma)
    k = _periodic_power(f, sigma[0]) or 1
    g = f.power(k)
    path = sigma
    prev = sigma
    steps = 0
    while True:
        if n is not None and steps >= n:
            break
        if n is None and len(path) >= max_len:
            break
        nxt = g.image(path)
        if len(nxt) > cap:
            if n is None:
                break
            err = CapExhausted(f"iterate length exceeds {cap}; largest feasible n is {steps}")
            err.largest_n = steps
            raise err
        if len(nxt) <= len(path) and n is None:
            raise DomainError("unit is not expanding")
        prev, path = path, nxt
        steps += 1
    lf = lengths(f, path)["ell_F"]
    if lf == 0:
        raise DomainError("iterate has zero F-length")
    mu = path_current(f, path, window, Fraction(1, lf))
    lp = lengths(f, prev)["ell_F"] or 1
    mu_prev = path_current(f, prev, window, Fraction(1, lp))
    mu.meta = {"n": steps, "power": k, "length": len(path),
               "cauchy_gap": _sup_gap(mu, mu_prev, window_paths(f, window))}
    return mu


def _sup_gap(mu, nu, paths) -> float:
    return max((abs(float(mu.pairing(p) - nu.pairing(p))) for p in paths), default=0.0)


def stretch_factor(f: GraphMap, sigma, rel_tol=1e-8, cap=5_000_000) -> tuple:
    """(lambda_sigma, residual) from successive F-length ratios."""
    if isinstance(sigma, SplittingUnit):
        sigma = sigma.path
    path = tuple(sigma)
    cur = lengths(f, path)["ell_F"]
    ratios = []
    for step in range(500):
        nxt_path = f.image(path)
        if len(nxt_path) > cap:
            break
        nxt = lengths(f, nxt_path)["ell_F"]
        if cur == 0:
            raise DomainError("zero F-length iterate")
        ratios.append(nxt / cur)
        path, cur = nxt_path, nxt
        if step >= 8:
            r = ratios[-1]
            gap = max(abs(r - x) for x in ratios[-4:-1])
            if gap <= rel_tol * abs(r):
                return r, gap
    if len(ratios) < 2:
        return (ratios[-1] if ratios else float("nan")), float("inf")
    return ratios[-1], abs(ratios[-1] - ratios[-2])


def pushforward_current(f: GraphMap, mu: CurrentApprox) -> CurrentApprox:
    """phi(eta_[w]) = eta_[phi(w)]; iterate currents push their path forward."""
    if mu.circuit is not None:
        return rational_current(f, f.image_circuit(mu.circuit), mu.window_len)
    if mu.path is not None:
        return path_current(f, f.image(mu.path), mu.window_len, mu.scale_by)
    raise DomainError("pushforward needs a rational or iterate current")


@dataclass
class AttractingSimplex:
    extremals: list  # (unit, CurrentApprox, lambda)
    window: int


def attracting_simplex(f: GraphMap, window: int = 3, max_len: int = 200_000) -> AttractingSimplex:
    ext = []
    for u in expanding_units(f):
        mu = approx_attracting_current(f, u, window=window, max_len=max_len)
        lam, _ = stretch_factor(f, u)
        ext.append((u, mu, lam))
    return AttractingSimplex(ext, window)


def _normalized_vector(f, mu, paths):
    nf = current_functionals(f, mu)["norm_F"]
    if nf == 0:
        raise DomainError("zero current has no projective class")
    return np.array([float(mu.pairing(p) / nf) for p in paths])


def distance_to_simplex(f: GraphMap, mu: CurrentApprox, simplex: AttractingSimplex, window=None) -> float:
    """Sup-norm gap to the least-squares convex combination of extremals."""
    if not simplex.extremals:
        return float("inf")
    L = window or simplex.window
    paths = window_paths(f, L)
    b = _normalized_vector(f, mu, paths)
    A = np.column_stack([_normalized_vector(f, e[1], paths) for e in simplex.extremals])
    rho = 1e3
    A2 = np.vstack([A, rho * np.ones(A.shape[1])])
    b2 = np.append(b, rho)
    t, _ = nnls(A2, b2)
    if t.sum() > 0:
        t /= t.sum()
    return float(np.max(np.abs(A @ t - b)))


def kpg_samples(f: GraphMap, window: int) -> list:
    """Rational currents of closed Nielsen paths and G_PG loops, all in K_PG."""
    ctx = pg_context(f)
    G = f.graph
    out = []
    for q in ctx.npg:
        if G.o(q[0]) == G.t(q[-1]) and q[0] != -q[-1]:
            out.append(rational_current(f, Circuit(q), window))
    for e in sorted(ctx.gpg):
        if G.o(e) == G.t(e):
            out.append(rational_current(f, Circuit((e,)), window))
    return out


def distance_to_hat(f: GraphMap, mu: CurrentApprox, simplex: AttractingSimplex, window=None) -> float:
    """Distance to the convex hull of the simplex and K_PG samples on a t-grid of step 1/64."""
    L = window or simplex.window
    samples = kpg_samples(f, L)
    d = distance_to_simplex(f, mu, simplex, L)
    if not samples or not simplex.extremals:
        return d
    paths = window_paths(f, L)
    b = _normalized_vector(f, mu, paths)
    A = np.column_stack([_normalized_vector(f, e[1], paths) for e in simplex.extremals])
    t, _ = nnls(np.vstack([A, 1e3 * np.ones(A.shape[1])]), np.append(b, 1e3))
    plus = A @ (t / t.sum() if t.sum() else t)
    for s in samples:
        k = _normalized_vector(f, s, paths)
        for i in range(65):
            x = i / 64
            d = min(d, float(np.max(np.abs(x * plus + (1 - x) * k - b))))
    return d


# -- completely split goodness ----------------------------------------------------------

@dataclass
class CsConstants:
    N: int
    C_N: int
    L: int


def cs_constants(f: GraphMap, samples: int = 400, seed: int = 0) -> CsConstants:
    """N with ell_exp([f^N e]) >= 4C+1, C_N for f^N, and an empirical L."""
    if "cs_consts" in f._cache:
        return f._cache["cs_consts"]
    C = constants(f).C
    N = expansion_power(f, 4 * C + 1)
    g = f.power(N)
    C_N = bcc_constant(g)["stored"]
    rng = random.Random(seed)
    G = f.graph
    ctx = pg_context(f)
    # Nielsen-periodic paths are the slowest to grow, so they are always sampled
    periodic = [q for q in ctx.npg if G.o(q[0]) == G.t(q[-1]) and q[0] != -q[-1]]
    for e in ctx.gpg:
        if G.o(e) == G.t(e):
            periodic.append((e,))

    def shortest_image(L):
        best = None
        for q in periodic:
            word = q * (L // len(q) + 2)
            for s in range(len(q)):
                p = word[s:s + L]
                v = len(g.image(p))
                best = v if best is None else min(best, v)
        for _ in range(samples):
            p = G.random_path(L, rng)
            v = len(g.image(p))
            best = v if best is None else min(best, v)
        return best

    L = 1
    while shortest_image(L) < C_N + 1:
        L *= 2
        if L > 4096:
            raise CapExhausted("no L found for the completely split goodness")
    lo, hi = L // 2, L
    while lo + 1 < hi:
        mid = (lo + hi) // 2
        if shortest_image(mid) >= C_N + 1:
            hi = mid
        else:
            lo = mid
    res = CsConstants(N, C_N, max(1, hi))
    f._cache["cs_consts"] = res
    return res


def cs_goodness(f: GraphMap, mu: CurrentApprox, consts: CsConstants | None = None,
                cap: int = 5_000_000) -> Fraction:
    """Completely split goodness of a rational current or of an iterate current.

    For an iterate current only positions whose L-windows lie inside the path
    are counted, which keeps the value a lower bound.
    """
    if mu.circuit is None and mu.path is None:
        raise DomainError("completely split goodness needs a rational or iterate current")
    consts = consts or cs_constants(f)
    ctx = pg_context(f)
    gN = f.power(consts.N)
    cyclic = mu.circuit is not None
    if cyclic:
        p = mu.circuit.edges
        denom = lengths(f, gN.image_circuit(mu.circuit))["ell_exp"]
    else:
        p = mu.path
        img = p
        for _ in range(consts.N):
            img = f.image(img)
            if len(img) > cap:
                raise CapExhausted("iterate current too long for the completely split goodness")
        denom = lengths(f, img)["ell_exp"]
    if denom == 0:
        raise DomainError("current lies in K_PG")
    m = len(p)
    L = consts.L
    valid = 0
    for i in range(m) if cyclic else range(L, m - L):
        e = p[i]
        if abs(e) in ctx.gprime:
            continue
        left = tuple(p[(i - L + j) % m] for j in range(L))
        right = tuple(p[(i + 1 + j) % m] for j in range(L))
        if (juncture_verdict(f, left, (e,)).status == VERIFIED
                and juncture_verdict(f, (e,), right).status == VERIFIED):
            valid += 1
    # the family is closed under inversion so each position is counted for both orientations
    return Fraction(2 * valid, denom)


# -- North-South experiments --------------------------------------------------------------

@dataclass
class NsTrace:
    seed: str
    rows: list = field(default_factory=list)
    success_plus: int | None = None
    success_minus: int | None = None
    skipped: str | None = None


TRACE_COLUMNS = ["seed", "n", "ell_exp", "ell_F", "goodness", "cs_goodness",
                 "dist_plus", "dist_minus", "ratio_F"]


def check_inverse(f: GraphMap, finv: GraphMap, samples: int = 20, kmax: int = 6, seed: int = 0) -> int:
    """Least k with finv o f^k acting trivially on sampled conjugacy classes."""
    if f.graph.names != finv.graph.names or f.graph.marking != finv.graph.marking:
        raise ValidationError("inverse representative must live on the same marked graph")
    rng = random.Random(seed)
    G = f.graph
    classes = [G.circuit_of_word(G.random_basis_word(rng.randint(3, 12), rng)) for _ in range(samples)]
    for k in range(1, kmax + 1):
        ok = True
        for c in classes:
            d = c
            for _ in range(k):
                d = f.image_circuit(d)
            if finv.image_circuit(d) != c:
                ok = False
                break
        if ok:
            return k
    raise ValidationError("inverse representative does not invert a power of the map on sampled classes")


def is_nonperipheral(f: GraphMap, c: Circuit) -> bool:
    w = f.graph.basis_word_of_circuit(c)
    return not is_peripheral(pg_structure(f).poly_system, w)


def ns_experiment(f: GraphMap, finv: GraphMap, seeds: Sequence[Circuit], nmax: int = 30,
                  window: int = 3, eps: float = 1e-2, max_len: int = 50_000,
                  simplex_plus=None, simplex_minus=None, threads: int = 1) -> list:
    check_inverse(f, finv)
    sp = simplex_plus or attracting_simplex(f, window)
    sm = simplex_minus or attracting_simplex(finv, window)
    csc = cs_constants(f)

    def run(c):
        G = f.graph
        tr = NsTrace(G.format(c.edges))
        mu0 = rational_current(f, c, window)
        if current_functionals(f, mu0)["psi0"] == 0:
            tr.skipped = "in K_PG"
            return tr
        if not is_nonperipheral(f, c):
            tr.skipped = "peripheral"
            return tr
        for direction, g, simplex in ((1, f, sp), (-1, finv, sm)):
            d = c
            prev_F = None
            for n in range(nmax + 1):
                mu = rational_current(g, d, window)
                ln = lengths(g, d)
                row = {"seed": tr.seed, "n": direction * n, "ell_exp": ln["ell_exp"], "ell_F": ln["ell_F"],
                       "goodness": float(goodness_lower(g, d)),
                       "cs_goodness": float(cs_goodness(f, mu0, csc)) if n == 0 and direction > 0 else "",
                       "dist_plus": distance_to_simplex(g, mu, sp) if direction > 0 else "",
                       "dist_minus": distance_to_simplex(g, mu, sm) if direction < 0 else "",
                       "ratio_F": ln["ell_F"] / prev_F if prev_F else ""}
                if not (direction < 0 and n == 0):
                    tr.rows.append(row)
                dist = row["dist_plus"] if direction > 0 else row["dist_minus"]
                if dist < eps:
                    if direction > 0 and tr.success_plus is None:
                        tr.success_plus = n
                    if direction < 0 and tr.success_minus is None:
                        tr.success_minus = n
                prev_F = ln["ell_F"]
                nxt = g.image_circuit(d)
                if len(nxt) > max_len:
                    break
                d = nxt
        return tr

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(threads) as ex:
            return list(ex.map(run, seeds))
    return [run(c) for c in seeds]


def random_seeds(f: GraphMap, count: int, seed: int = 0, min_len=3, max_len=12) -> list:
    """Random nonperipheral seeds outside K_PG."""
    rng = random.Random(seed)
    G = f.graph
    out = []
    tries = 0
    while len(out) < count:
        tries += 1
        if tries > 100 * count:
            raise CapExhausted("could not draw enough admissible seeds")
        c = G.circuit_of_word(G.random_basis_word(rng.randint(min_len, max_len), rng))
        if c in out or not is_nonperipheral(f, c):
            continue
        if lengths(f, c)["ell_exp"] == 0:
            continue
        out.append(c)
    return out


# -- norm growth ---------------------------------------------------------------------------

def norm_growth_experiment(f: GraphMap, seeds: Sequence[Circuit], m_range: int = 3, burn_in: int = 1,
                           delta: float = 0.5, max_len: int = 2_000_000) -> list:
    """Per seed: F-length ratios under the 3K-expanding power after burn-in."""
    if m_range <= 0:
        return []
    N = constants(f).N3K
    g = f.power(N)
    table = []
    for c in seeds:
        d = c
        for _ in range(burn_in):
            d = g.image_circuit(d)
        good = goodness_lower(f, d)
        entry = {"seed": f.graph.format(c.edges), "goodness": good, "eligible": good >= delta,
                 "ratios": [], "exact_ge_3": []}
        cur = lengths(f, d)["ell_F"]
        for _ in range(m_range):
            nxt_c = g.image_circuit(d)
            if len(nxt_c) > max_len:
                break
            nxt = lengths(f, nxt_c)["ell_F"]
            entry["ratios"].append(Fraction(nxt, cur) if cur else None)
            entry["exact_ge_3"].append(nxt >= 3 * cur)
            d, cur = nxt_c, nxt
        rs = [float(r) for r in entry["ratios"] if r]
        entry["geo_mean"] = math.exp(sum(map(math.log, rs)) / len(rs)) if rs else None
        entry["audit"] = entry["geo_mean"] is not None and entry["geo_mean"] >= 3
        table.append(entry)
    return table


# -- electrified length --------------------------------------------------------------------

def _readable_from(cores, path: tuple) -> bool:
    for core in cores:
        for v in core.arcs:
            if core.reads(path, v) is not None:
                return True
    return False


def electrified_length(f: GraphMap, w) -> int:
    """Length of the circuit with peripheral subpaths coned off (cost 2 each)."""
    G = f.graph
    if not isinstance(w, Circuit):
        w = G.circuit_of_word(G.parse_basis(w) if isinstance(w, str) else tuple(w))
    cores = pg_structure(f).poly_cores_g
    if not is_nonperipheral(f, w):
        return 2
    p = w.edges
    m = len(p)
    # reach[i]: longest readable run starting at i (capped at m)
    reach = []
    for i in range(m):
        k = 0
        while k < m and _readable_from(cores, tuple(p[(i + j) % m] for j in range(k + 1))):
            k += 1
        reach.append(k)
    best = None
    for s in range(m):
        # linear DP on the rotation starting at s
        INF = 10 ** 9
        dp = [INF] * (m + 1)
        dp[0] = 0
        for i in range(m):
            if dp[i] == INF:
                continue
            dp[i + 1] = min(dp[i + 1], dp[i] + 1)
            r = min(reach[(s + i) % m], m - i)
            for k in range(2, r + 1):
                dp[i + k] = min(dp[i + k], dp[i] + 2)
        best = dp[m] if best is None else min(best, dp[m])
    return best


def gstar_tree_bound(f: GraphMap) -> int:
    """Total G* edge length, an upper bound on the diameter of any subtree."""
    gs = pg_structure(f).gstar
    return sum(len(e["proj"]) for e in gs["edges"])


def lipschitz_audit(f: GraphMap, classes: Sequence[Circuit]) -> dict:
    """Fitted B0 for ell_exp against the electrified length."""
    ratios = []
    for c in classes:
        le = lengths(f, c)["ell_exp"]
        if le == 0:
            continue
        eh = electrified_length(f, c)
        ratios.append(max(le / eh, eh / le))
    B0 = max(ratios) if ratios else 1.0
    bound = max(5 * constants(f).C, 2 * gstar_tree_bound(f) + 3)
    return {"B0": B0, "bound": bound, "ok": B0 <= bound, "samples": len(ratios)}


def cross_map_audit(f: GraphMap, f2: GraphMap, classes: Sequence[Circuit]) -> dict:
    """Fitted B for ell_exp ratios between two representatives on the same marked graph."""
    ratios = []
    for c in classes:
        a = lengths(f, c)["ell_exp"]
        b = lengths(f2, c)["ell_exp"]
        if a == 0 and b == 0:
            continue
        if a == 0 or b == 0:
            ratios.append(float("inf"))
            continue
        ratios.append(max(a / b, b / a))
    return {"B": max(ratios) if ratios else 1.0, "samples": len(ratios)}

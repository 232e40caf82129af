"""Independent reference computations used by several test modules."""

import random
from fractions import Fraction

import numpy as np

from outdyn.graph import Circuit, cyclically_reduce_word


def circuit_lengths(f, c, nmax=20, cap=3_000_000):
    """Lengths of [f^n(c)] for n = 0..nmax, stopping early past the cap."""
    out = [len(c)]
    cur = c.edges
    for _ in range(nmax):
        img = f.image(cur)
        cur = cyclically_reduce_word(img)
        out.append(len(cur))
        if len(cur) > cap:
            break
    return out


def growth_oracle(f, c, nmax=20):
    """'polynomial' if lengths for n in [10, 20] fit a polynomial of degree
    at most the edge count, 'exponential' if the ratio stays >= 1.05 there.

    Early iterates can shrink through cyclic cancellation, so only the tail
    is fitted.
    """
    ls = circuit_lengths(f, c, nmax)
    deg = f.graph.n_edges
    if len(ls) == nmax + 1:
        d = np.array(ls[10:], dtype=object)
        for _ in range(deg + 1):
            d = d[1:] - d[:-1]
        if all(x == 0 for x in d):
            return "polynomial"
    tail = ls[10:]
    if len(tail) >= 2 and all(b >= 1.05 * a for a, b in zip(tail, tail[1:])):
        return "exponential"
    return "undecided"


def random_circuits(f, count, seed, lo=1, hi=12):
    rng = random.Random(seed)
    G = f.graph
    return [G.random_circuit(rng.randint(lo, hi), rng) for _ in range(count)]


def brute_cancellation(f, r1, r2):
    a, b = f.image(r1), f.image(r2)
    n = 0
    while n < min(len(a), len(b)) and a[len(a) - 1 - n] == -b[n]:
        n += 1
    return n


def ell_exp_by_blocks(f, c, npg, excluded):
    """Exponential length by marking every cyclic occurrence of an N_PG path."""
    p = c.edges
    m = len(p)
    covered = [False] * m
    for q in npg:
        if len(q) > m:
            continue
        for s in range(m):
            if all(p[(s + i) % m] == q[i] for i in range(len(q))):
                for i in range(len(q)):
                    covered[(s + i) % m] = True
    return sum(1 for i in range(m) if not covered[i] and abs(p[i]) not in excluded)


def frac(x):
    return Fraction(x)

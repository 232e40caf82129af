import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from outdyn.graph import Circuit, cyclically_reduce_word, inverse
from outdyn.graphmap import GraphMap
from outdyn.lengths import (AnnotatedPath, SplittingUnit, bcc_constant, constants, ell_exp,
                            exponential_decomposition, goodness_lower, image_splitting, is_splitting,
                            iterate_until_split, lengths, parse_units, pg_context, relative_lengths)
from outdyn.nielsen import enumerate_npg

from oracles import brute_cancellation, ell_exp_by_blocks, random_circuits


@pytest.fixture(scope="module")
def rho(fib):
    return fib.graph.parse("b-a-ba")


def test_decomposition_examples(fib, fibc, rho):
    d = exponential_decomposition(fib, rho)
    assert d.maximal == [rho]
    d = exponential_decomposition(fib, (1,))
    assert d.maximal == [] and d.segments == [("exp", (1,))]
    d = exponential_decomposition(fibc, (3,) + rho)
    assert d.maximal == [rho]
    assert d.segments[0] == ("exp", (3,))


def test_length_examples(fib, fibc, rho):
    assert lengths(fib, (1,))["ell_exp"] == 1
    assert lengths(fib, rho)["ell_exp"] == 0
    assert lengths(fibc, (3,))["ell_exp"] == 0
    # without an F subgraph the F-length is the plain length
    assert lengths(fib, rho)["ell_F"] == 4


def test_relative_examples(fib, rho):
    assert relative_lengths(fib, rho, 0, 4)["ell_exp_rel"] == ell_exp(fib, rho)
    assert relative_lengths(fib, rho, 0, 1)["ell_exp_rel"] == 0
    w = (1,) + rho
    assert relative_lengths(fib, w, 1, 5)["ell_exp_rel"] == 0
    assert relative_lengths(fib, w, 0, 1)["ell_exp_rel"] == 1


def test_circuit_lengths_match_block_oracle(corpus):
    for f in corpus.values():
        ctx = pg_context(f)
        npg = enumerate_npg(f)
        for c in random_circuits(f, 60, seed=2):
            assert ell_exp(f, c) == ell_exp_by_blocks(f, c, npg, ctx.gprime)


paths = st.lists(st.sampled_from([1, -1, 2, -2, 3, -3]), min_size=1, max_size=16)


@given(paths, st.data())
def test_additivity_and_sandwich(fibc, p, data):
    G = fibc.graph
    p = G.tighten(p)
    if not p:
        return
    C = constants(fibc).C
    cut = data.draw(st.integers(0, len(p)))
    rel = lambda s, e: relative_lengths(fibc, p, s, e)["ell_exp_rel"]
    assert ell_exp(fibc, p) == rel(0, cut) + rel(cut, len(p))
    s = data.draw(st.integers(0, len(p)))
    e = data.draw(st.integers(s, len(p)))
    sub = p[s:e]
    assert rel(s, e) <= ell_exp(fibc, sub) <= rel(s, e) + 2 * C


def test_zero_preservation(fibc, rho):
    rng = random.Random(4)
    pieces = [(3,), (-3,), rho, inverse(rho)]
    for _ in range(40):
        p = ()
        for _ in range(rng.randint(1, 5)):
            p = fibc.graph.tighten(p + rng.choice(pieces))
        for n in range(4):
            assert ell_exp(fibc, fibc.iterate(p, n)) == 0


def test_image_splitting_examples(fib, rho):
    ap = parse_units(fib, (1,))
    out = image_splitting(fib, ap)
    assert [u.path for u in out.units] == [(1,), (2,)]
    ap = AnnotatedPath(rho, [SplittingUnit("eg_inp", rho)])
    out = image_splitting(fib, ap)
    # the loop has period two: its image is the reversed loop, still a single unit
    assert [u.kind for u in out.units] == ["eg_inp"]
    assert out.path == inverse(rho)


def test_exceptional_width():
    g = GraphMap.rose({"a": "a", "b": "ba", "c": "ca"})
    ap = parse_units(g, g.graph.parse("baac-"))
    assert [u.kind for u in ap.units] == ["exceptional"]
    assert image_splitting(g, ap).units[0].data[3] == 2
    h = GraphMap.rose({"a": "a", "b": "baa", "c": "ca"})
    ap = parse_units(h, h.graph.parse("baaac-"))
    assert ap.units[0].data[3] == 3
    assert image_splitting(h, ap).units[0].data[3] == 4


def test_iterate_until_split(fib, ident):
    ap, k = iterate_until_split(fib, (1,))
    assert k == 0 and [u.path for u in ap.units] == [(1,)]
    ap, k = iterate_until_split(fib, fib.graph.parse("ab-"))
    assert k <= 10 and ap.check()
    ap, k = iterate_until_split(ident, (1, 2, -1))
    assert k == 0


def test_is_splitting(fib, rho):
    ap, _ = iterate_until_split(fib, fib.iterate((1,), 4))
    cuts, pos = [], 0
    for u in ap.units[:-1]:
        pos += len(u.path)
        cuts.append(pos)
    assert is_splitting(fib, ap.path, cuts).status == "verified"
    assert is_splitting(fib, (1, 2), [1]).status == "verified"
    v = is_splitting(fib, rho, [2])
    assert v.status == "refuted" and v.k <= 2


def test_goodness_examples(fib, rho):
    assert goodness_lower(fib, Circuit(rho)) == 0
    assert goodness_lower(fib, Circuit((1,))) == 1
    for c in random_circuits(fib, 20, seed=8):
        g = goodness_lower(fib, c)
        assert 0 <= g <= 1


def test_goodness_after_iteration(fib):
    for c in random_circuits(fib, 10, seed=9, hi=8):
        cur = c
        best = Fraction(0)
        for _ in range(12):
            best = max(best, goodness_lower(fib, cur))
            if best == 1 or ell_exp(fib, cur) == 0:
                break
            cur = Circuit(cyclically_reduce_word(fib.image(cur.edges)))
        assert best == 1 or ell_exp(fib, cur) == 0


def test_unit_count(fibc):
    ctx = pg_context(fibc)
    rng = random.Random(12)
    for _ in range(30):
        p = fibc.graph.random_path(rng.randint(1, 6), rng)
        ap, k = iterate_until_split(fibc, p, kmax=12)
        edges = sum(1 for u in ap.units if u.kind == "edge" and abs(u.path[0]) not in ctx.gprime)
        assert ell_exp(fibc, ap.path) == edges


def test_expansion_under_power(fib, fibc):
    for f in (fib, fibc):
        N = constants(f).N3K
        g = f.power(N)
        rng = random.Random(13)
        for _ in range(20):
            ap, _ = iterate_until_split(f, f.graph.random_path(rng.randint(1, 4), rng), kmax=12)
            e = ell_exp(f, ap.path)
            if e > 0:
                assert ell_exp(f, g.image(ap.path)) >= 3 * e


def test_incomplete_mass(fib):
    C = constants(fib).C
    N = constants(fib).N3K
    g = fib.power(N)
    for c in random_circuits(fib, 8, seed=14, hi=6):
        e = ell_exp(fib, c)
        if e == 0:
            continue
        img = Circuit(cyclically_reduce_word(g.image(c.edges)))
        _, det = goodness_lower(fib, img, return_detail=True)
        bad = det["ell_exp"] - det["complete_edges"]
        assert bad <= 8 * C * e


def test_bcc_constant(fib, fibc, ident):
    assert bcc_constant(ident)["empirical"] == 0 and bcc_constant(ident)["stored"] == 0
    assert bcc_constant(fib)["empirical"] == 1 and bcc_constant(fib)["stored"] == 2
    assert bcc_constant(fibc)["stored"] == 2


def test_bcc_bounds_random_joins(corpus):
    for f in corpus.values():
        Cf = bcc_constant(f)["stored"]
        rng = random.Random(21)
        G = f.graph
        for _ in range(300):
            r1 = G.random_path(rng.randint(1, 10), rng)
            r2 = G.random_path(rng.randint(1, 10), rng, start=G.t(r1[-1]))
            if r2[0] == -r1[-1]:
                continue
            assert brute_cancellation(f, r1, r2) <= Cf


def test_constants_table(fib):
    c = constants(fib)
    assert c.K == 8  # twice the longest Nielsen family member
    assert c.C_f == 2 and c.C == max(c.K, c.C_f)
    e = fib.iterate((1,), c.N3K)
    assert ell_exp(fib, e) >= 3 * c.K

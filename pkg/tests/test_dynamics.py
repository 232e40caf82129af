from fractions import Fraction

import pytest

from outdyn.currents import current_functionals, freq_distance, in_kpg, rational_current
from outdyn.dynamics import (approx_attracting_current, attracting_simplex, check_inverse, cs_constants,
                             cs_goodness, distance_to_hat, distance_to_simplex, electrified_length,
                             expanding_units, lipschitz_audit, cross_map_audit, norm_growth_experiment,
                             ns_experiment, pushforward_current, random_seeds, stretch_factor)
from outdyn.errors import CapExhausted, DomainError, ValidationError
from outdyn.graph import Circuit, cyclically_reduce_word
from outdyn.lengths import goodness_lower

GOLDEN = (1 + 5 ** 0.5) / 2
# frozen: a-count over length of the 25th FIB iterate of a, by literal expansion
FREQ_A = 0.6180339887


@pytest.fixture(scope="module")
def simplices(fib, fib_inv):
    return attracting_simplex(fib, 3), attracting_simplex(fib_inv, 3)


def _literal_ratio():
    w = "a"
    for _ in range(25):
        w = "".join({"a": "ab", "b": "a"}[x] for x in w)
    return w.count("a") / len(w)


def test_frozen_frequency_oracle():
    assert abs(_literal_ratio() - FREQ_A) < 1e-9


def test_expanding_units(fib, fibc, ident):
    assert [u.path for u in expanding_units(fib)] == [(1,), (-2,)]
    assert [u.path for u in expanding_units(fibc)] == [(1,), (-2,)]
    assert expanding_units(ident) == []


def test_attracting_current_window(fib):
    mu = approx_attracting_current(fib, (1,), window=1)
    nf = current_functionals(fib, mu)["norm_F"]
    assert abs(float(mu.pairing((1,)) / nf) - FREQ_A) < 1e-4
    assert mu.pairing((1, 1, 1)) == 0


def test_attracting_current_cauchy(fib):
    cur = {n: approx_attracting_current(fib, (1,), n=n, window=2) for n in (10, 11, 20, 21)}
    assert freq_distance(fib, cur[20], cur[21]) < freq_distance(fib, cur[10], cur[11])


def test_explicit_n_over_cap(fib):
    with pytest.raises(CapExhausted) as info:
        approx_attracting_current(fib, (1,), n=40, window=2, cap=10_000)
    # |f^n(a)| is the (n+2)th Fibonacci number: 6765 at n=18, 10946 at n=19
    assert info.value.largest_n == 18


def test_stretch_factors(fib, fibc, fibs):
    lam = fib.strata[0].pf["lambda"]
    for f, u in ((fib, (1,)), (fibc, (1,)), (fibs, (3,))):
        val, _ = stretch_factor(f, u)
        assert abs(val - GOLDEN) < 1e-6
        assert abs(val - lam) < 1e-6


def test_pushforward(fib, fibc, ident):
    assert pushforward_current(fib, rational_current(fib, "a", 2)).counts == rational_current(fib, "ab", 2).counts
    mu = rational_current(ident, "ab-", 2)
    assert pushforward_current(ident, mu).counts == mu.counts
    assert in_kpg(fibc, pushforward_current(fibc, rational_current(fibc, "cb-a-ba")))


def test_eigencurrents(fib, fibc):
    for f in (fib, fibc):
        for u in expanding_units(f):
            mu = approx_attracting_current(f, u, window=3)
            assert freq_distance(f, pushforward_current(f, mu), mu, window=3) < 1e-3


def test_extremal_distances(fib, simplices):
    sp, _ = simplices
    for _, mu, _ in sp.extremals:
        assert distance_to_simplex(fib, mu, sp) < 1e-9
        assert distance_to_hat(fib, mu, sp) < 1e-9


def test_ns_examples(fib, fib_inv, simplices):
    sp, sm = simplices
    seeds = [Circuit((1,)), fib.graph.circuit_of_word("aba-b-")]
    a, comm = ns_experiment(fib, fib_inv, seeds, simplex_plus=sp, simplex_minus=sm)
    assert a.success_plus is not None and a.success_plus <= 30
    assert a.success_minus is not None and a.success_minus <= 30
    assert comm.skipped == "in K_PG" and comm.rows == []


def test_check_inverse(fib, fibc, fib_inv):
    assert check_inverse(fib, fib_inv) == 2
    with pytest.raises(ValidationError):
        check_inverse(fib, fibc)
    with pytest.raises(ValidationError):
        check_inverse(fib, fib)


def test_cs_goodness(fib):
    consts = cs_constants(fib)
    ext = approx_attracting_current(fib, (1,), n=12, window=3)
    assert cs_goodness(fib, ext, consts) > 0
    with pytest.raises(DomainError):
        cs_goodness(fib, rational_current(fib, "aba-b-"), consts)
    gN = fib.power(consts.N)
    for w in ("a", "ab", "aab-"):
        c = fib.graph.circuit_of_word(w)
        lhs = goodness_lower(fib, gN.image_circuit(c))
        assert lhs >= cs_goodness(fib, rational_current(fib, c), consts)


def test_norm_growth(fib):
    seeds = [fib.graph.circuit_of_word(w) for w in ("a", "ab")]
    for e in norm_growth_experiment(fib, seeds, m_range=2):
        assert e["eligible"] and all(e["exact_ge_3"])
    (e,) = norm_growth_experiment(fib, [fib.graph.circuit_of_word("aba-b-")], m_range=2)
    assert e["ratios"] == [Fraction(1), Fraction(1)]
    assert norm_growth_experiment(fib, seeds, m_range=0) == []


def test_electrified(fib):
    assert electrified_length(fib, Circuit((1,))) == 1
    assert electrified_length(fib, fib.graph.circuit_of_word("aba-b-")) == 2


def test_audits(fib, fib_inv):
    seeds = random_seeds(fib, 30, seed=3)
    rep = lipschitz_audit(fib, seeds)
    assert rep["ok"] and rep["B0"] <= rep["bound"]
    assert cross_map_audit(fib, fib_inv, seeds)["B"] <= 50


def test_random_seeds_deterministic(fib):
    assert random_seeds(fib, 5, seed=4) == random_seeds(fib, 5, seed=4)

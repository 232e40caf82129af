import random

import pytest
from hypothesis import given, strategies as st

from outdyn.errors import DomainError, StructuralError
from outdyn.graph import Circuit, MarkedGraph, canonical_cycle, inverse, is_reduced

ROSE = MarkedGraph(["v"], [("a", "v", "v"), ("b", "v", "v")])
ROSE3 = MarkedGraph(["v"], [("a", "v", "v"), ("b", "v", "v"), ("c", "v", "v")])

letters = st.sampled_from([1, -1, 2, -2])
words = st.lists(letters, min_size=0, max_size=14)


def test_tighten_examples():
    g = ROSE
    assert g.tighten(g.parse("aa-b")) == g.parse("b")
    assert g.tighten(g.parse("b")) == g.parse("b")
    assert g.tighten(g.parse("abb-a-")) == ()


def test_cyclic_reduce_examples():
    g = ROSE3
    assert g.cyclic_reduce(g.parse("aba-")) == Circuit(g.parse("b"))
    c = Circuit(g.parse("ab"))
    assert g.cyclic_reduce(c.edges) == c
    assert g.cyclic_reduce(g.parse("abb-a-cc")) == Circuit(g.parse("cc"))


def test_circuit_of_word_examples():
    g = ROSE
    assert g.circuit_of_word("a") == Circuit((1,))
    assert g.circuit_of_word("bab-") == Circuit((1,))
    assert g.circuit_of_word("aba-b-") == Circuit(g.parse("aba-b-"))


def test_parse_and_format_roundtrip():
    g = MarkedGraph(["v"], [("e1", "v", "v"), ("e2", "v", "v")])
    p = g.parse("e1,e2-,e1")
    assert p == (1, -2, 1)
    assert g.format(p) == "e1,e2-,e1"
    assert ROSE.format(ROSE.parse("ab-a")) == "ab-a"


def test_errors():
    with pytest.raises(StructuralError):
        ROSE.parse("az")
    with pytest.raises(DomainError):
        ROSE.cyclic_reduce(ROSE.parse("aa-"))
    with pytest.raises(DomainError):
        Circuit(())
    with pytest.raises(StructuralError):
        MarkedGraph(["u", "w"], [("a", "u", "u"), ("b", "w", "w")], marking=[(1,)])


def test_non_rose_marking():
    # theta graph: three edges from u to w
    g = MarkedGraph(["u", "w"], [("x", "u", "w"), ("y", "u", "w"), ("z", "u", "w")],
                    marking=["xy-", "xz-"], generators=["a", "b"])
    assert g.rank == 2
    c = g.circuit_of_word("ab-")
    assert g.basis_word_of_circuit(c) in {(1, -2), (-2, 1), (-1, 2), (2, -1)}
    assert g.circuit_of_word(g.basis_word_of_circuit(c)) == c
    assert c == Circuit(g.parse("yz-"))


@given(words)
def test_tighten_idempotent(w):
    p = ROSE.tighten(w)
    assert is_reduced(p)
    assert ROSE.tighten(p) == p


@given(words, st.integers(0, 20))
def test_circuit_rotation_invariant(w, k):
    p = ROSE.tighten(w)
    if not p:
        return
    try:
        c = ROSE.cyclic_reduce(p)
    except DomainError:
        return
    e = c.edges
    k %= len(e)
    assert Circuit(e[k:] + e[:k]) == c
    assert Circuit(inverse(e)) == c.inverse()
    assert canonical_cycle(e) == c.edges


@given(words, words)
def test_circuit_of_word_conjugation_invariant(w, u):
    try:
        c = ROSE.circuit_of_word(tuple(w))
    except DomainError:
        return
    conj = tuple(u) + tuple(w) + inverse(u)
    assert ROSE.circuit_of_word(conj) == c


def test_basis_word_roundtrip_random():
    rng = random.Random(3)
    for _ in range(50):
        c = ROSE3.random_circuit(rng.randint(1, 10), rng)
        assert ROSE3.circuit_of_word(ROSE3.basis_word_of_circuit(c)) == c


def test_reduced_paths_count():
    # a rose with n petals has 2n(2n-1)^(L-1) reduced paths of length L
    for L in range(1, 5):
        assert len(ROSE.reduced_paths(L)) == 4 * 3 ** (L - 1)

import itertools

from hypothesis import given, strategies as st

from outdyn.graph import cyclically_reduce_word, inverse
from outdyn.subgroups import SubgroupSystem, fold_core_graph, intersect_cores, is_peripheral

COMM = (1, 2, -1, -2)


def _loop_trace(core, w):
    # independent oracle: follow w from every vertex by hand
    for v in core.arcs:
        x = v
        for lab in w:
            x = core.arcs[x].get(lab)
            if x is None:
                break
        if x == v:
            return True
    return False


def test_fold_examples():
    g = fold_core_graph([(1,)])
    assert len(g.vertices) == 1 and g.rank() == 1
    g = fold_core_graph([(1,), (2,)])
    assert len(g.vertices) == 1 and g.rank() == 2
    g = fold_core_graph([COMM])
    assert len(g.vertices) == 4 and g.rank() == 1
    assert g.contains(COMM) and not g.contains((1,))


def test_fold_output_folded_and_core():
    for gens in ([(1, 1, 2)], [(1, 2), (1, -2)], [(1, 2, 1), (2, 1, 2)], [COMM, (1, 1)]):
        g = fold_core_graph(gens)
        assert g.is_folded() and g.is_core()
        for w in gens:
            assert g.contains(w)


def test_peripheral_examples():
    sys_ = SubgroupSystem([fold_core_graph([COMM])])
    assert is_peripheral(sys_, COMM + COMM)
    assert not is_peripheral(sys_, (1,))
    assert not _loop_trace(fold_core_graph([COMM]), (1,))
    assert not is_peripheral(SubgroupSystem([]), (1, 2))
    assert is_peripheral(sys_, ())


word = st.lists(st.sampled_from([1, -1, 2, -2]), min_size=1, max_size=10)


@given(word, word)
def test_peripheral_symmetric(w, u):
    w = cyclically_reduce_word(w)
    if not w:
        return
    sys_ = SubgroupSystem([fold_core_graph([COMM])])
    p = is_peripheral(sys_, w)
    assert p == is_peripheral(sys_, inverse(w))
    assert p == is_peripheral(sys_, tuple(u) + w + inverse(u))


def test_intersections():
    (c,) = intersect_cores(fold_core_graph([(1,)]), fold_core_graph([(1, 1)]))
    assert c.contains((1, 1)) and not c.contains((1,))
    assert intersect_cores(fold_core_graph([(1,)]), fold_core_graph([(2,)])) == []
    (c,) = intersect_cores(fold_core_graph([(1,), (2,)]), fold_core_graph([COMM]))
    assert c.rank() == 1 and _loop_trace(c, COMM)


def test_intersection_symmetric():
    gens = [[(1,)], [(1, 1)], [(1, 2)], [COMM], [(1, 2, 2)], [(1,), (2, 1, -2)]]
    for a, b in itertools.product(gens, repeat=2):
        x = intersect_cores(fold_core_graph(a), fold_core_graph(b))
        y = intersect_cores(fold_core_graph(b), fold_core_graph(a))
        assert sorted(c.conj_key() for c in x) == sorted(c.conj_key() for c in y)

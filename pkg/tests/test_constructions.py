import pytest

from khribbon.constructions import (
    EmptyList,
    build_companion,
    bundled_movie,
    check_bundle,
    clasp,
    load_diagram,
    trefoil_ears,
    trivial_tangle,
)
from khribbon.diagram import closure, is_isomorphic, partial_sum, tangle_sum
from khribbon.khcomplex import HomologyF2, build_complex, induced_matrices, x_action
from khribbon.linalg import MatrixF2
from khribbon.movie import movie_chain_map, restrict_reduced, reverse


def test_empty_list():
    with pytest.raises(EmptyList):
        build_companion([])


@pytest.mark.parametrize("n", [1, 2, 3])
def test_bundle_shape(n):
    b = build_companion([trefoil_ears()] * n)
    assert check_bundle(b) == []
    assert b.composite.n_crossings == 3 * n
    assert b.companion.n_crossings == 3 * n + 2
    assert len(b.companion.components) == 1
    assert b.movie == bundled_movie(n)
    t = trefoil_ears()
    for _ in range(n - 1):
        t = partial_sum(t, trefoil_ears())
    assert is_isomorphic(b.composite, closure(t))
    assert is_isomorphic(b.companion, tangle_sum(t, clasp()))
    kinds = [m.kind for m in b.movie.moves]
    assert kinds.count("birth") == 1 and kinds.count("saddle") == 1
    assert all(b.basepoint not in (m.edges + m.new_edges) for m in b.movie.moves)


def test_degenerate_bundle():
    b = build_companion([trivial_tangle()])
    assert check_bundle(b) == []
    assert b.basepoint is None
    assert b.composite.n_crossings == 0
    assert b.companion.n_crossings == 2


def test_granny_is_bundle_composite():
    assert is_isomorphic(load_diagram("granny"), build_companion([trefoil_ears()] * 2).composite)


def test_check_bundle_reports_problems():
    good = build_companion([trefoil_ears()])
    bad = type(good)(good.companion, good.composite, good.movie, good.basepoint)
    probs = check_bundle(bad)
    assert "movie does not start at the composite" in probs
    assert "movie does not end at the companion" in probs


def _identity(mats):
    return all(m == MatrixF2.identity(m.nrows) for m in mats.values())


@pytest.mark.parametrize("n", [1, 2])
def test_split_injective_full_and_reduced(n):
    b = build_companion([trefoil_ears()] * n)
    f = movie_chain_map(b.movie)
    g = movie_chain_map(reverse(b.movie))
    assert f.is_chain_map() and g.is_chain_map()
    for ff, gg in ((f, g), (restrict_reduced(f, b.basepoint), restrict_reduced(g, b.basepoint))):
        hs = HomologyF2(ff.source)
        mats = induced_matrices(ff, hs)
        assert all(m.rank() == hs.dim(bd) for bd, m in mats.items())
        assert _identity(induced_matrices(ff.compose(gg), hs, hs))


@pytest.mark.parametrize("n", [1, 2])
def test_module_map(n):
    b = build_companion([trefoil_ears()] * n)
    f = movie_chain_map(b.movie)
    hs, ht = HomologyF2(f.source), HomologyF2(f.target)
    lhs = induced_matrices(f.compose(x_action(f.target, b.basepoint)), hs, ht)
    rhs = induced_matrices(x_action(f.source, b.basepoint).compose(f), hs, ht)
    assert lhs.keys() == rhs.keys()
    assert all(lhs[bd] == rhs[bd] for bd in lhs)


def test_companion_homology_contains_composite():
    b = build_companion([trefoil_ears()] * 2)
    h_comp = HomologyF2(build_complex(b.composite)).dims
    h_p = HomologyF2(build_complex(b.companion)).dims
    assert all(h_p.get(bd, 0) >= n for bd, n in h_comp.items())

import pytest
from hypothesis import assume, given, settings, strategies as st

from khribbon.constructions import build_companion, bundled_movie, load_diagram, trefoil_ears
from khribbon.diagram import parse_diagram
from khribbon.khcomplex import HomologyF2, build_complex, identity_map, induced_matrices
from khribbon.linalg import MatrixF2
from khribbon.movie import (
    BasepointTouched,
    InvalidSite,
    Move,
    Movie,
    MovieError,
    apply_move,
    chain_map_of_move,
    dumps_movie,
    induced_homology_map,
    is_ribbon,
    loads_movie,
    movie_chain_map,
    reverse,
)


def iso(mats, hs, ht):
    return all(m.rank() == m.nrows == m.ncols for m in mats.values()) and hs.dims == ht.dims


def is_identity(mats):
    return all(m == MatrixF2.identity(m.nrows) for m in mats.values())


def test_birth_and_saddle_on_unknot():
    u = parse_diagram("U")
    b = apply_move(u, Move("birth", (), (5,)))
    assert b.loops == (1, 5)
    s = apply_move(b, Move("saddle", (1, 5), (6,)))
    assert s.loops == (6,)


def test_r1_on_unknot():
    r = apply_move(parse_diagram("U"), Move("r1_pos", (1,), (2, 3), (1,)))
    assert r.n_crossings == 1 and r.n_plus == 1
    r = apply_move(parse_diagram("U"), Move("r1_neg", (1,), (2, 3), (-1,)))
    assert r.n_minus == 1


def test_invalid_sites():
    tr = load_diagram("trefoil")
    with pytest.raises(InvalidSite):
        apply_move(tr, Move("saddle", (1, 99), (7, 8)))
    with pytest.raises(InvalidSite):
        apply_move(tr, Move("r3", (1, 2, 3)))
    with pytest.raises(InvalidSite):
        Move("flip", (1,))
    with pytest.raises(MovieError):
        apply_move(tr, Move("birth", (), (3,)))


def test_basepoint_touched():
    tr = load_diagram("trefoil").with_basepoint(1)
    with pytest.raises(BasepointTouched):
        apply_move(tr, Move("r1_pos", (1,), (7, 8, 9)))


def test_move_record_round_trip():
    m = Move("r2_intro", (7, 1), (7, 8, 7, 9, 10, 11), (1, 1))
    assert Move.from_record(m.to_record()) == m
    with pytest.raises(InvalidSite):
        Move.from_record({"move": "birth", "extra": 1})


@pytest.mark.parametrize("n", [1, 2, 3])
def test_movie_file_round_trip(n):
    mv = bundled_movie(n)
    text = dumps_movie(mv)
    again = loads_movie(text)
    assert again == mv
    assert dumps_movie(again) == text


def test_movie_file_errors():
    with pytest.raises(InvalidSite):
        loads_movie("")
    with pytest.raises(InvalidSite):
        loads_movie("not json")
    with pytest.raises(InvalidSite):
        loads_movie('{"begin":"U"}')


def test_birth_map_unknot():
    u = parse_diagram("U")
    m = Move("birth", (), (2,))
    post = apply_move(u, m)
    f = chain_map_of_move(m, u, post)
    assert f.shift == (0, 1)
    assert f.is_chain_map()
    src, tgt = f.source, f.target
    one = src.blocks[(0, 1)][0]
    img = f.maps[(0, 1)][0]
    assert bin(img).count("1") == 1
    (v, L) = tgt.blocks[(0, 2)][img.bit_length() - 1]
    assert L == 0 and one[1] == 0
    ex_img = f.maps[(0, -1)][0]
    (v, L) = tgt.blocks[(0, 0)][ex_img.bit_length() - 1]
    assert bin(L).count("1") == 1


def test_birth_then_death_is_zero():
    tr = load_diagram("trefoil")
    mv = Movie(tr, (Move("birth", (), (7,)), Move("death", (7,))))
    assert mv.euler_char == 2
    assert not is_ribbon(mv)
    f = movie_chain_map(mv)
    assert f.shift == (0, 2)
    assert all(m.is_zero() for m in induced_homology_map(f).values())


def test_empty_movie_is_identity():
    tr = load_diagram("trefoil")
    mv = Movie(tr, ())
    assert is_ribbon(mv) and mv.end == tr and mv.euler_char == 0
    assert is_identity(induced_homology_map(movie_chain_map(mv)))
    assert is_identity(induced_matrices(identity_map(build_complex(tr))))


R1_MOVES = [
    Move(kind, (2,), (7, 8, 9), (side,))
    for kind in ("r1_pos", "r1_neg")
    for side in (1, -1)
]


@pytest.mark.parametrize("m", R1_MOVES, ids=lambda m: f"{m.kind}{m.sides[0]:+d}")
def test_r1_maps(m):
    tr = load_diagram("trefoil")
    mv = Movie(tr, (m,))
    f = movie_chain_map(mv)
    assert f.is_chain_map()
    hs, ht = HomologyF2(f.source), HomologyF2(f.target)
    assert iso(induced_matrices(f, hs, ht), hs, ht)
    back = reverse(mv)
    assert back.end == tr
    assert back.moves[0].kind == "r1_elim"
    g = movie_chain_map(back)
    assert is_identity(induced_matrices(f.compose(g), hs, hs))


def _r2_sites(d):
    out = []
    for face in d.faces:
        edges = sorted({e for e, _ in face})
        for a in edges:
            for b in edges:
                if a != b:
                    out.append((a, b))
    return out


@pytest.mark.parametrize("ab", _r2_sites(load_diagram("trefoil")))
def test_r2_maps_on_trefoil(ab):
    tr = load_diagram("trefoil")
    new = tuple(range(7, 13))
    for sides in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
        try:
            mv = Movie(tr, (Move("r2_intro", ab, new, sides),))
        except MovieError:
            continue
        f = movie_chain_map(mv)
        hs, ht = HomologyF2(f.source), HomologyF2(f.target)
        assert iso(induced_matrices(f, hs, ht), hs, ht)
        g = movie_chain_map(reverse(mv))
        assert is_identity(induced_matrices(f.compose(g), hs, hs))
        return
    pytest.fail(f"no r2 move on edges {ab}")


def test_ribbon_flags():
    mv = bundled_movie(2)
    assert is_ribbon(mv)
    assert mv.euler_char == 0
    assert not is_ribbon(reverse(mv))
    assert reverse(reverse(mv)).end == mv.end


def test_companion_map_injective_with_left_inverse():
    mv = bundled_movie(2)
    f = movie_chain_map(mv)
    assert f.shift == (0, 0)
    hs, ht = HomologyF2(f.source), HomologyF2(f.target)
    mats = induced_matrices(f, hs, ht)
    assert all(m.rank() == hs.dim(bd) for bd, m in mats.items())
    g = movie_chain_map(reverse(mv))
    assert is_identity(induced_matrices(f.compose(g), hs, hs))


@settings(max_examples=15, deadline=None)
@given(st.lists(st.tuples(st.sampled_from(["r1_pos", "r1_neg", "r2_intro"]), st.integers(0, 50), st.sampled_from([1, -1]), st.sampled_from([1, -1])), min_size=1, max_size=2))
def test_random_isotopies_are_isomorphisms(steps):
    d = load_diagram("trefoil")
    moves = []
    for kind, pick, s1, s2 in steps:
        top = max(d.edges)
        if kind == "r2_intro":
            sites = _r2_sites(d)
            if not sites:
                continue
            m = Move(kind, sites[pick % len(sites)], tuple(range(top + 1, top + 7)), (s1, s2))
        else:
            e = d.edges[pick % len(d.edges)]
            m = Move(kind, (e,), (top + 1, top + 2, top + 3), (s1,))
        try:
            d = apply_move(d, m)
        except MovieError:
            continue
        moves.append(m)
    assume(moves)
    mv = Movie(load_diagram("trefoil"), tuple(moves))
    f = movie_chain_map(mv)
    hs, ht = HomologyF2(f.source), HomologyF2(f.target)
    assert iso(induced_matrices(f, hs, ht), hs, ht)


def test_bundle_movie_matches_builder():
    b = build_companion([trefoil_ears()])
    assert bundled_movie(1) == b.movie

from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from khribbon.constructions import load_diagram
from khribbon.diagram import parse_diagram
from khribbon.khcomplex import (
    CheckFailed,
    HomologyF2,
    LengthMismatch,
    MissingBasepoint,
    build_complex,
    induced_matrices,
    integral_homology,
    integral_records,
    khovanov_homology,
    quotient_complex,
    reduced_complex,
    resolve,
    verify_shumakovitch,
    x_action,
)
from khribbon.linalg import MatrixF2
from oracle import kh_dims_f2

BUNDLED = ["unknot", "trefoil", "figure8", "granny", "companion_1", "companion_2"]

TREFOIL_F2 = {(-3, -9): 1, (-3, -7): 1, (-2, -7): 1, (-2, -5): 1, (0, -3): 1, (0, -1): 1}
TREFOIL_RED = {(-3, -8): 1, (-2, -6): 1, (0, -2): 1}


def bp_of(d):
    return d.basepoint if d.basepoint is not None else min(d.components[0])


def test_resolve_examples():
    assert len(resolve(parse_diagram("U"), ()).circles) == 1
    tr = load_diagram("trefoil")
    # mirror of the convention where 000 has two circles; see the ledger
    assert len(resolve(tr, (0, 0, 0)).circles) == 3
    assert len(resolve(tr, (1, 1, 1)).circles) == 2
    with pytest.raises(LengthMismatch):
        resolve(tr, (0, 1))


def test_unknot_complex():
    c = build_complex(parse_diagram("U"))
    assert {bd: len(g) for bd, g in c.blocks.items()} == {(0, 1): 1, (0, -1): 1}
    assert HomologyF2(c).dims == {(0, -1): 1, (0, 1): 1}
    assert integral_homology(build_complex(parse_diagram("U"), "Z")) == {(0, -1): [0], (0, 1): [0]}


@pytest.mark.parametrize("name", BUNDLED)
@pytest.mark.parametrize("ring", ["F2", "Z"])
def test_d_squared(name, ring):
    assert build_complex(load_diagram(name), ring).check_d_squared()


@pytest.mark.parametrize("name", BUNDLED)
def test_matches_oracle(name):
    d = load_diagram(name)
    assert HomologyF2(build_complex(d)).dims == kh_dims_f2(d.crossings, d.signs, d.loops)


def test_trefoil_values():
    tr = load_diagram("trefoil")
    assert build_complex(tr).total_dim == 30
    assert HomologyF2(build_complex(tr)).dims == TREFOIL_F2
    z = integral_homology(build_complex(tr, "Z"))
    assert z[(-2, -7)] == [2]
    assert sum(1 for f in z.values() for x in f if x > 1) == 1
    red = khovanov_homology(tr, reduced=True, basepoint=1)
    assert red.dims == TREFOIL_RED
    assert integral_records(z)[0] == {"i": -3, "j": -9, "factors": [0]}


def test_figure8_torsion():
    z = integral_homology(build_complex(load_diagram("figure8"), "Z"))
    tors = {bd: [x for x in f if x > 1] for bd, f in z.items()}
    assert {bd: t for bd, t in tors.items() if t} == {(-1, -3): [2], (2, 3): [2]}


def test_hopf_link_torsion_free():
    h = parse_diagram("X[1,3,2,4];X[3,1,4,2]")
    z = integral_homology(build_complex(h, "Z"))
    assert z == {(0, 0): [0], (0, 2): [0], (2, 4): [0], (2, 6): [0]}


def test_mod2_reduction_matches_f2_build():
    tr = load_diagram("figure8")
    assert build_complex(tr, "Z").mod2().diff == build_complex(tr, "F2").diff


def test_x_action_unknot():
    c = build_complex(parse_diagram("U;bp=1"))
    x = x_action(c)
    one, ex = (0, 1), (0, -1)
    assert x.maps[one] == [1]
    assert x.maps[ex] == [0]
    m = induced_matrices(x)
    assert sum(mat.rank() for mat in m.values()) == 1


@pytest.mark.parametrize("name", ["trefoil", "figure8", "granny"])
def test_x_squares_to_zero_and_commutes(name):
    d = load_diagram(name)
    c = build_complex(d)
    x = x_action(c, bp_of(d))
    assert x.is_chain_map()
    xx = x.compose(x)
    assert all(v == 0 for imgs in xx.maps.values() for v in imgs)


def test_trefoil_x_image_equals_reduced():
    tr = load_diagram("trefoil")
    c = build_complex(tr)
    mats = induced_matrices(x_action(c, 1))
    assert sum(m.rank() for m in mats.values()) == 3


def test_missing_basepoint():
    c = build_complex(load_diagram("trefoil"))
    with pytest.raises(MissingBasepoint):
        reduced_complex(c)
    with pytest.raises(MissingBasepoint):
        x_action(c, 99)


def test_reduced_unknot():
    c = reduced_complex(build_complex(parse_diagram("U")), 1)
    assert {bd: len(g) for bd, g in c.blocks.items()} == {(0, 0): 1}


def test_granny_kunneth():
    red = khovanov_homology(load_diagram("granny"), reduced=True, basepoint=2)
    conv = Counter()
    for (i1, j1), a in TREFOIL_RED.items():
        for (i2, j2), b in TREFOIL_RED.items():
            conv[(i1 + i2, j1 + j2)] += a * b
    assert red.dims == dict(conv)


def test_reduced_integral_granny_torsion_free():
    c = reduced_complex(build_complex(load_diagram("granny"), "Z"), 2)
    assert all(x == 0 for f in integral_homology(c).values() for x in f)


@pytest.mark.parametrize("name", ["unknot", "trefoil", "figure8", "granny", "companion_1"])
def test_shumakovitch(name):
    d = load_diagram(name)
    rep = verify_shumakovitch(d, bp_of(d))
    assert rep["passed"]
    assert sum(r["dim"] for r in rep["kh"]) == 2 * sum(r["dim"] for r in rep["reduced"])


def test_shumakovitch_needs_basepoint():
    with pytest.raises(MissingBasepoint):
        verify_shumakovitch(load_diagram("trefoil"), 42)


def test_quotient_is_complementary():
    d = load_diagram("trefoil")
    c = build_complex(d)
    r, q = reduced_complex(c, 1), quotient_complex(c, 1)
    assert r.total_dim + q.total_dim == c.total_dim
    assert r.check_d_squared() and q.check_d_squared()


@pytest.mark.parametrize("name", ["trefoil", "granny"])
def test_basepoint_independence(name):
    d = load_diagram(name)
    c = build_complex(d)
    h = HomologyF2(c)
    comp = d.components[0]
    mats = [induced_matrices(x_action(c, e), h, h) for e in comp]
    for other in mats[1:]:
        assert other.keys() == mats[0].keys()
        for bd in other:
            assert other[bd] == mats[0][bd]


@settings(max_examples=20, deadline=None)
@given(st.sampled_from(["trefoil", "figure8"]), st.data())
def test_homology_reps_are_independent_cycles(name, data):
    d = load_diagram(name)
    c = build_complex(d)
    h = HomologyF2(c)
    bd = data.draw(st.sampled_from(sorted(h.dims)))
    reps = h.reps[bd]
    # every rep has coordinates equal to its own unit vector
    for k, z in enumerate(reps):
        assert h.coords(bd, z) == 1 << k
    mask = data.draw(st.integers(1, (1 << len(reps)) - 1))
    combo = 0
    for k in range(len(reps)):
        if mask >> k & 1:
            combo ^= reps[k]
    assert h.coords(bd, combo) == mask


def test_check_failed_carries_bidegree():
    err = CheckFailed("bad", (1, 2))
    assert err.bidegree == (1, 2)

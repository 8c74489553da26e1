import pytest
from hypothesis import given, settings, strategies as st

from khribbon.constructions import clasp, load_diagram, trefoil_ears, trivial_tangle
from khribbon.diagram import (
    BadBasepoint,
    DanglingEdge,
    MalformedCrossing,
    OrientationConflict,
    closure,
    is_isomorphic,
    parse_diagram,
    parse_tangle,
    partial_sum,
    tangle_sum,
)

TREFOIL = "X[1,4,2,5];X[3,6,4,1];X[5,2,6,3]"


def test_unknot_token():
    d = parse_diagram("U")
    assert d.n_crossings == 0
    assert len(d.loops) == 1
    assert len(d.components) == 1


def test_trefoil_parse():
    d = parse_diagram(TREFOIL)
    assert d.n_crossings == 3
    assert len(d.edges) == 6
    assert len(d.components) == 1
    # KnotAtlas trefoil is the left-handed one
    assert d.signs == (-1, -1, -1)
    assert d.n_plus + d.n_minus == 3


@pytest.mark.parametrize(
    "text, exc",
    [
        ("X[1,2,3]", MalformedCrossing),
        ("X[1,2,3,4]", DanglingEdge),
        ("X[1,4,2,5];X[3,6,4,1];X[5,2,6,3];bp=9", BadBasepoint),
        ("Q[1]", MalformedCrossing),
    ],
)
def test_parse_errors(text, exc):
    with pytest.raises(exc):
        parse_diagram(text)


def test_orientation_conflict_is_a_diagram_error():
    assert issubclass(OrientationConflict, ValueError)


def test_basepoint_and_loops_round_trip():
    d = parse_diagram(TREFOIL + ";U;bp=3")
    assert d.basepoint == 3
    assert d.loops == (7,)
    assert parse_diagram(d.serialize()) == d


@pytest.mark.parametrize("name", ["unknot", "trefoil", "figure8", "granny", "companion_1"])
def test_bundled_round_trip(name):
    d = load_diagram(name)
    assert parse_diagram(d.serialize()) == d


def test_hopf_orientation():
    h = parse_diagram("X[1,3,2,4];X[3,1,4,2]")
    assert h.signs == (1, 1)
    assert len(h.components) == 2


def test_trivial_tangle_sums():
    t = trivial_tangle()
    assert partial_sum(t, t).n_crossings == 0
    assert len(tangle_sum(t, t).components) == 2
    assert len(closure(t, "numerator").components) == 2
    # horizontal strands: the denominator closure is a single loop
    assert len(closure(t, "denominator").components) == 1
    assert len(closure(trivial_tangle(vertical=True), "denominator").components) == 2


def test_clasp_shape():
    c = clasp()
    assert c.n_crossings == 2
    assert all(len(s) == 3 for s in c.strands)
    num = closure(c, "numerator")
    assert num.n_crossings == 2 and len(num.components) == 1
    assert tangle_sum(trivial_tangle(), c).n_crossings == 2


def test_clasp_partial_sum_closes_a_loop():
    # both clasp strands run top to bottom, so gluing two clasps side by side
    # closes the middle strands into a circle
    with pytest.raises(DanglingEdge):
        partial_sum(clasp(), clasp())


def test_ears_sums():
    e = trefoil_ears()
    assert e.n_crossings == 3
    assert is_isomorphic(closure(e), parse_diagram(TREFOIL))
    pe = partial_sum(e, e)
    assert pe.n_crossings == 6 and len(pe.ends) == 4
    granny = closure(pe)
    assert granny.n_crossings == 6 and len(granny.components) == 1
    comp = tangle_sum(pe, clasp())
    assert comp.n_crossings == 8 and len(comp.components) == 1
    assert comp.is_planar()


def test_tangle_round_trip():
    for t in (clasp(), trefoil_ears(), partial_sum(trefoil_ears(), trefoil_ears())):
        assert parse_tangle(t.serialize()) == t


def test_tangle_parse_errors():
    with pytest.raises(DanglingEdge):
        parse_tangle("X[1,2,3,4]")
    with pytest.raises(MalformedCrossing):
        parse_tangle("X[1,2,3,4];ends[1,2,3,4];U")


@settings(max_examples=25, deadline=None)
@given(st.lists(st.booleans(), min_size=1, max_size=3))
def test_partial_sum_additive(which):
    pool = [trefoil_ears(), trivial_tangle()]
    ts = [pool[0] if w else pool[1] for w in which]
    acc = ts[0]
    for t in ts[1:]:
        acc = partial_sum(acc, t)
    assert acc.n_crossings == sum(t.n_crossings for t in ts)
    assert len(acc.ends) == 4
    d = closure(acc)
    assert parse_diagram(d.serialize()) == d


def test_isomorphism_ignores_relabelling():
    a = parse_diagram(TREFOIL)
    b = parse_diagram("X[11,14,12,15];X[13,16,14,11];X[15,12,16,13]")
    assert is_isomorphic(a, b)
    assert not is_isomorphic(a, load_diagram("figure8"))

"""Acceptance criteria, one test each.

Every criterion records a one-line verdict.  Under pytest the lines are
printed in the terminal summary (see conftest.py); run this file directly
to print them without pytest.
"""

import time
from collections import Counter

import pytest

from khribbon.constructions import build_companion, load_diagram, trefoil_ears
from khribbon.khcomplex import (
    HomologyF2,
    build_complex,
    induced_matrices,
    reduced_complex,
    verify_shumakovitch,
    x_action,
)
from khribbon.linalg import MatrixF2
from khribbon.movie import movie_chain_map, restrict_reduced, reverse
from khribbon.steenrod import check_naturality_sq1, sq1_of_diagram
from oracle import kh_dims_f2

VERDICTS = {}

KNOTS = ["unknot", "trefoil", "figure8", "granny", "companion_1", "companion_2"]


def record(num, title, limit, body):
    t0 = time.perf_counter()
    try:
        detail = body()
        ok = True
    except AssertionError as exc:
        ok, detail = False, str(exc) or "assertion failed"
    spent = time.perf_counter() - t0
    if ok and spent > limit:
        ok, detail = False, f"took {spent:.1f}s, limit {limit}s"
    VERDICTS[num] = f"criterion {num} [{'PASS' if ok else 'FAIL'}] {title} ({spent:.2f}s) {detail or ''}".rstrip()
    assert ok, VERDICTS[num]


def _bp(d):
    return d.basepoint if d.basepoint is not None else min(d.components[0])


def _identity(mats):
    return all(m == MatrixF2.identity(m.nrows) for m in mats.values())


def _complexes():
    for name in KNOTS:
        d = load_diagram(name)
        for ring in ("F2", "Z"):
            assert build_complex(d, ring).check_d_squared(), f"d^2 != 0 for {name} over {ring}"
        ours = HomologyF2(build_complex(d)).dims
        assert ours == kh_dims_f2(d.crossings, d.signs, d.loops), f"{name} differs from the naive oracle"
    return f"{len(KNOTS)} diagrams"


def _shumakovitch():
    for name in KNOTS:
        d = load_diagram(name)
        verify_shumakovitch(d, _bp(d))
    return "exact sequence and splitting hold"


def _ribbon():
    for n in (1, 2):
        b = build_companion([trefoil_ears()] * n)
        f = movie_chain_map(b.movie)
        g = movie_chain_map(reverse(b.movie))
        pairs = ((f, g), (restrict_reduced(f, b.basepoint), restrict_reduced(g, b.basepoint)))
        for tag, (ff, gg) in zip(("Kh", "reduced Kh"), pairs):
            hs = HomologyF2(ff.source)
            for bd, m in induced_matrices(ff, hs).items():
                assert m.rank() == hs.dim(bd), f"n={n} {tag}: not injective at {bd}"
            assert _identity(induced_matrices(ff.compose(gg), hs, hs)), f"n={n} {tag}: no left inverse"
    return "n = 1, 2"


def _module_map():
    for n in (1, 2):
        b = build_companion([trefoil_ears()] * n)
        f = movie_chain_map(b.movie)
        hs, ht = HomologyF2(f.source), HomologyF2(f.target)
        lhs = induced_matrices(f.compose(x_action(f.target, b.basepoint)), hs, ht)
        rhs = induced_matrices(x_action(f.source, b.basepoint).compose(f), hs, ht)
        for bd in lhs:
            assert lhs[bd] == rhs[bd], f"n={n}: X*F != F*X at {bd}"
    tr = load_diagram("trefoil")
    c = build_complex(tr)
    h = HomologyF2(c)
    ref = induced_matrices(x_action(c, tr.edges[0]), h, h)
    for e in tr.edges[1:]:
        other = induced_matrices(x_action(c, e), h, h)
        for bd in ref:
            assert other[bd] == ref[bd], f"X at edge {e} differs at {bd}"
    return f"movies n = 1, 2; {len(tr.edges)} trefoil basepoints"


def _steenrod():
    b = build_companion([trefoil_ears()] * 2)
    granny = sq1_of_diagram(b.composite)
    assert granny.nonzero(), "Sq1 vanishes on Kh(granny)"
    assert check_naturality_sq1(b.movie), "naturality square fails"
    comp = sq1_of_diagram(b.companion)
    assert comp.nonzero(), "Sq1 vanishes on Kh(companion)"
    return f"Sq1 nonzero at {granny.nonzero()} on granny, {comp.nonzero()} on companion"


def _kunneth():
    tr = load_diagram("trefoil")
    red = HomologyF2(reduced_complex(build_complex(tr), 1)).dims
    conv = Counter()
    for (i1, j1), a in red.items():
        for (i2, j2), b in red.items():
            conv[(i1 + i2, j1 + j2)] += a * b
    g = load_diagram("granny")
    got = HomologyF2(reduced_complex(build_complex(g), _bp(g))).dims
    assert got == dict(conv), f"{got} != {dict(conv)}"
    return f"total reduced dim {sum(got.values())}"


CRITERIA = [
    (1, "complex correctness", 5, _complexes),
    (2, "Shumakovitch suite", 5, _shumakovitch),
    (3, "ribbon split injectivity", 30, _ribbon),
    (4, "module-map property", 10, _module_map),
    (5, "Sq1 pipeline", 60, _steenrod),
    (6, "Kunneth dims", 5, _kunneth),
]


@pytest.mark.parametrize("num, title, limit, body", CRITERIA, ids=[f"criterion{c[0]}" for c in CRITERIA])
def test_criterion(num, title, limit, body):
    record(num, title, limit, body)


@pytest.mark.skip(reason="optional stretch: no PD code for 15n41127 is bundled")
def test_criterion7_stretch():
    pass


VERDICTS[7] = "criterion 7 [SKIP] 15n41127 stretch goal (optional, not attempted)"


if __name__ == "__main__":
    for num, title, limit, body in CRITERIA:
        try:
            record(num, title, limit, body)
        except AssertionError:
            pass
    for k in sorted(VERDICTS):
        print(VERDICTS[k])

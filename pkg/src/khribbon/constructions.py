"""Clasp tangle, trefoil with ears, and the companion ribbon movies.

A companion bundle starts from the denominator closure of a partial sum of
tangles (a connected sum) and ends at the sum of the same tangle with the
clasp.  The movie births a small loop beside the west closure arc, pushes
a finger of it over that arc and bands it to the east closure arc.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from importlib import resources

from .diagram import (
    Diagram,
    Tangle,
    closure,
    closure_edges,
    is_isomorphic,
    parse_diagram,
    parse_tangle,
    partial_sum,
    tangle_sum,
)
from .movie import InvalidSite, Move, Movie, MovieError, is_ribbon, loads_movie


class EmptyList(ValueError):
    pass


def data_text(name):
    return resources.files("khribbon").joinpath("data", name).read_text()


def load_diagram(name):
    """A bundled diagram: ``unknot``, ``trefoil``, ``figure8``, ``granny``, ``companion_<n>``."""
    if name == "granny":
        return closure(partial_sum(trefoil_ears(), trefoil_ears()))
    if name.startswith("companion_"):
        return build_companion([trefoil_ears()] * int(name.split("_")[1])).companion
    return parse_diagram(data_text(f"{name}.pd"))


def trivial_tangle(vertical=False):
    """Crossingless tangle; strands NW-NE and SW-SE unless ``vertical``."""
    if vertical:
        return Tangle((), (), (1, 2, 1, 2))
    return Tangle((), (), (1, 1, 2, 2))


def clasp():
    """Two-crossing clasp: one strand runs over the other twice.

    Its ends are labelled as seen from the far side of a tangle sum, so
    ``tangle_sum(t, clasp())`` is planar.
    """
    return parse_tangle(data_text("clasp.tangle"))


def trefoil_ears():
    """Trefoil cut open along two edges of one face; denominator closure is the trefoil."""
    return parse_tangle(data_text("trefoil_ears.tangle"))


@dataclass(frozen=True)
class CompanionBundle:
    composite: Diagram
    companion: Diagram
    movie: Movie
    basepoint: int | None


def _interior_edge(t):
    inner = sorted(set(t.occ) - set(t.ends))
    return inner[0] if inner else None


def _ribbon_moves(composite, west, east):
    """Candidate move lists: birth, finger over the west arc, band to the east arc."""
    top = max(composite.edges)
    o = top + 1
    a2, b1, b2, b3 = top + 2, top + 3, top + 4, top + 5
    c, d = top + 6, top + 7
    if east == west:
        # both closure arcs are one crossingless loop
        east_after, b3 = b1, b1
    else:
        east_after = east
    for s_a in (1, -1):
        for s_b in (1, -1):
            yield (
                Move("birth", (), (o,)),
                Move("r2_intro", (o, west), (o, a2, o, b1, b2, b3), (s_a, s_b)),
                Move("saddle", (o, east_after), (c, d)),
            )


def build_companion(tangles):
    """Composite knot, its clasp companion and a ribbon movie between them."""
    tangles = list(tangles)
    if not tangles:
        raise EmptyList("build_companion needs at least one tangle")
    t = reduce(partial_sum, tangles)
    bp = _interior_edge(t)
    composite = closure(t, "denominator")
    if bp is not None:
        composite = composite.with_basepoint(bp)
    west, east = closure_edges(t, "denominator")
    target = tangle_sum(t, clasp())
    for moves in _ribbon_moves(composite, west, east):
        try:
            mv = Movie(composite, moves)
        except MovieError:
            continue
        if is_isomorphic(mv.end, target):
            return CompanionBundle(composite, mv.end, mv, bp)
    raise InvalidSite("no ribbon movie found between the composite and the clasp sum")


def bundled_movie(n):
    """The shipped companion movie for ``n`` trefoil-ears summands (n = 1, 2, 3)."""
    return loads_movie(data_text(f"companion_{n}.movie"))


def check_bundle(b):
    """Structural invariants of a bundle; returns a list of failure messages."""
    problems = []
    if b.movie.start != b.composite:
        problems.append("movie does not start at the composite")
    if b.movie.end != b.companion:
        problems.append("movie does not end at the companion")
    if not is_ribbon(b.movie):
        problems.append("movie has a death")
    if b.movie.euler_char != 0:
        problems.append(f"euler characteristic {b.movie.euler_char} != 0")
    if b.basepoint is not None and any(
        fr.basepoint != b.basepoint for fr in b.movie.frames
    ):
        problems.append("basepoint lost along the movie")
    return problems

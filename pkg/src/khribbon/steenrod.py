"""First Steenrod square on Khovanov homology, via integral lifts.

For an F2 cycle ``x`` pick an integer chain ``x~`` reducing to it.  Then
``d x~`` is divisible by two and ``Sq1 [x] = [(d x~ / 2) mod 2]``.  This is
the Bockstein of ``0 -> Z/2 -> Z/4 -> Z/2 -> 0``; it raises the homological
degree by one and keeps the quantum degree.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .khcomplex import (
    HomologyF2,
    KhError,
    build_complex,
    induced_matrices,
    reduced_complex,
    x_action,
)
from .linalg import MatrixF2, iter_bits

__all__ = [
    "BocksteinResult",
    "LiftInconsistency",
    "sq1",
    "sq1_reduced",
    "sq1_of_diagram",
    "check_naturality_sq1",
    "check_module_map_sq1",
]


class LiftInconsistency(KhError):
    """``d x~`` has an odd coefficient: the integral and F2 complexes disagree."""

    def __init__(self, message, bidegree=None):
        super().__init__(message)
        self.bidegree = bidegree


@dataclass
class BocksteinResult:
    """Sq1 as matrices ``H^{i,j} -> H^{i+1,j}`` in the bases of ``homology``."""

    homology: HomologyF2
    matrices: dict = field(default_factory=dict)

    def matrix(self, bd):
        m = self.matrices.get(bd)
        if m is None:
            i, j = bd
            return MatrixF2.zeros(self.homology.dim((i + 1, j)), self.homology.dim(bd))
        return m

    def rank(self, bd):
        m = self.matrices.get(bd)
        return m.rank() if m is not None else 0

    def nonzero(self):
        """Bidegrees where Sq1 is nonzero, sorted."""
        return sorted(bd for bd, m in self.matrices.items() if not m.is_zero())

    def is_zero(self):
        return not self.nonzero()

    def squares_to_zero(self):
        for (i, j), m in self.matrices.items():
            nxt = self.matrices.get((i + 1, j))
            if nxt is not None and not (nxt @ m).is_zero():
                return False
        return True

    def records(self):
        out = []
        for (i, j), m in sorted(self.matrices.items()):
            out.append({"i": i, "j": j, "rank_sq1": m.rank(), "matrix": m.to_dense()})
        return out


def _lift(vec, rng):
    """Integer chain reducing to ``vec`` mod 2; random odd/even noise when ``rng`` is set."""
    if rng is None:
        return {b: 1 for b in iter_bits(vec)}
    out = {}
    for b in iter_bits(vec):
        out[b] = rng.choice((1, -1, 3, -3))
    return out


def _perturb(cF2, bd, z, rng, nbits):
    """Add the boundary of a random chain and random even noise."""
    i, j = bd
    below = cF2.diff.get((i - 1, j), [])
    for img in below:
        if rng.random() < 0.5:
            z ^= img
    lift = _lift(z, rng)
    for b in range(nbits):
        if rng.random() < 0.3:
            lift[b] = lift.get(b, 0) + rng.choice((2, -2))
    return lift


def sq1(cZ, cF2=None, homology=None, seed=None):
    """Bockstein of every F2 homology class of ``cZ``.

    ``seed`` randomizes the cycle representative and the integral lift;
    the result must not depend on it.
    """
    if cZ.ring != "Z":
        raise ValueError("sq1 needs the integral complex")
    cF2 = cF2 if cF2 is not None else cZ.mod2()
    if cF2.blocks != cZ.blocks:
        raise ValueError("F2 complex is not the reduction of the integral one")
    h = homology or HomologyF2(cF2)
    rng = random.Random(seed) if seed is not None else None
    mats = {}
    for bd, reps in h.reps.items():
        if not reps:
            continue
        i, j = bd
        tb = (i + 1, j)
        dz = cZ.diff.get(bd, [])
        cols = []
        for z in reps:
            if rng is None:
                lift = _lift(z, None)
            else:
                lift = _perturb(cF2, bd, z, rng, cZ.dim(bd))
            acc = {}
            for b, c in lift.items():
                if c:
                    for r, v in dz[b].items():
                        acc[r] = acc.get(r, 0) + c * v
            y = 0
            for r, v in acc.items():
                if v % 2:
                    raise LiftInconsistency(
                        f"odd coefficient {v} in the boundary of a lifted cycle", bd
                    )
                if (v // 2) % 2:
                    y |= 1 << r
            cols.append(h.coords(tb, y))
        mats[bd] = MatrixF2.from_columns(h.dim(tb), cols)
    return BocksteinResult(h, mats)


def sq1_of_diagram(d):
    return sq1(build_complex(d, "Z"), build_complex(d, "F2"))


def sq1_reduced(d, basepoint=None):
    """Sq1 on reduced homology, from the reduced integral subcomplex."""
    cZ = reduced_complex(build_complex(d, "Z"), basepoint)
    cF2 = reduced_complex(build_complex(d, "F2"), basepoint)
    return sq1(cZ, cF2)


def _agree(lhs, rhs):
    for bd in set(lhs) | set(rhs):
        a, b = lhs.get(bd), rhs.get(bd)
        if a is None:
            a, b = b, a
        if b is None:
            if not a.is_zero():
                return False
        elif a != b:
            return False
    return True


def _squares(f_mats, sq_s, sq_t, shift):
    """Both paths around the square ``F * Sq1`` and ``Sq1 * F``, keyed by source bidegree."""
    di, dj = shift
    lhs, rhs = {}, {}
    for bd in sq_s.homology.reps:
        i, j = bd
        if not sq_s.homology.dim(bd):
            continue
        up = (i + 1, j)
        f_up = f_mats.get(up)
        if f_up is not None:
            lhs[bd] = f_up @ sq_s.matrix(bd)
        f_here = f_mats.get(bd)
        if f_here is not None:
            rhs[bd] = sq_t.matrix((i + di, j + dj)) @ f_here
    return lhs, rhs


def check_naturality_sq1(mv):
    """True iff the movie map commutes with Sq1 on homology."""
    from .movie import movie_chain_map

    f = movie_chain_map(mv)
    sq_s = sq1_of_diagram(mv.start)
    sq_t = sq1_of_diagram(mv.end)
    mats = induced_matrices(f, sq_s.homology, sq_t.homology)
    lhs, rhs = _squares(mats, sq_s, sq_t, f.shift)
    return _agree(lhs, rhs)


def check_module_map_sq1(d, basepoint=None):
    """True iff multiplication by X commutes with Sq1 on homology."""
    sq = sq1_of_diagram(d)
    c = sq.homology.complex
    x = x_action(c, basepoint)
    mats = induced_matrices(x, sq.homology, sq.homology)
    lhs, rhs = _squares(mats, sq, sq, x.shift)
    return _agree(lhs, rhs)

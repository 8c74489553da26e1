"""Cube of resolutions and bigraded Khovanov complexes over F2 and Z.

Generators are pairs ``(v, L)``: ``v`` is a cube vertex stored as an int
(bit ``k`` is the smoothing at crossing ``k``) and ``L`` is a label mask
over the circles of that resolution (bit set means the circle is labelled
``X``).  Circles of a resolution are ordered by their minimal edge id.

Smoothings of a crossing ``(a, b, c, d)``: the 0-smoothing joins ``a-b``
and ``c-d``, the 1-smoothing joins ``a-d`` and ``b-c``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .linalg import Echelon, MatrixF2, MatrixZ, invariant_factors, iter_bits, kernel_and_image


class KhError(Exception):
    pass


class LengthMismatch(KhError):
    pass


class MissingBasepoint(KhError):
    pass


class CheckFailed(KhError):
    def __init__(self, message, bidegree=None):
        super().__init__(message if bidegree is None else f"{message} at {bidegree}")
        self.bidegree = bidegree


class NotAChainMap(KhError):
    pass


class ComplexMismatch(KhError):
    pass


# ---------------------------------------------------------------------------
# resolutions


def _resolve_circles(d, v):
    parent = {e: e for e in d.occ}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for k, (a, b, c, e) in enumerate(d.crossings):
        pairs = ((a, e), (b, c)) if (v >> k) & 1 else ((a, b), (c, e))
        for x, y in pairs:
            rx, ry = find(x), find(y)
            if rx != ry:
                parent[max(rx, ry)] = min(rx, ry)
    groups = {}
    for e in d.occ:
        groups.setdefault(find(e), set()).add(e)
    for o in d.loops:
        groups[o] = {o}
    return tuple(frozenset(groups[r]) for r in sorted(groups))


@dataclass(frozen=True)
class Resolution:
    vertex: tuple
    circles: tuple  # frozensets of edge ids, sorted by minimum

    @property
    def circle_ids(self):
        return tuple(min(c) for c in self.circles)


def resolve(d, vertex):
    """Complete resolution of ``d`` at ``vertex`` (a 0/1 sequence)."""
    vertex = tuple(int(b) for b in vertex)
    if len(vertex) != d.n_crossings:
        raise LengthMismatch(
            f"vertex has length {len(vertex)}, diagram has {d.n_crossings} crossings"
        )
    v = sum(b << k for k, b in enumerate(vertex))
    return Resolution(vertex, _resolve_circles(d, v))


def _vkey(v, n):
    return tuple((v >> k) & 1 for k in range(n))


class Cube:
    """Memoized per-vertex circle data and edge label tables of a diagram."""

    def __init__(self, d):
        self.diagram = d
        self.n = n = d.n_crossings
        self.circles = [_resolve_circles(d, v) for v in range(1 << n)]
        self.circle_of = []
        for circ in self.circles:
            self.circle_of.append({e: idx for idx, c in enumerate(circ) for e in c})
        self._tables = {}

    def n_circles(self, v):
        return len(self.circles[v])

    def edge_table(self, v, k):
        """Label images along the cube edge ``v -> v | 1<<k``.

        Returns a list indexed by the source label mask whose entries are
        lists of target label masks (the F2 image).
        """
        key = (v, k)
        tab = self._tables.get(key)
        if tab is not None:
            return tab
        w = v | (1 << k)
        src, dst = self.circle_of[v], self.circle_of[w]
        a, b, c, e = self.diagram.crossings[k]
        m = len(self.circles[v])
        ca, cc = src[a], src[c]
        moved = [dst[min(circ)] for circ in self.circles[v]]
        tab = []
        if ca != cc:
            t = dst[a]
            for L in range(1 << m):
                xa, xc = (L >> ca) & 1, (L >> cc) & 1
                if xa and xc:
                    tab.append([])
                    continue
                out = 0
                for idx in iter_bits(L):
                    if idx not in (ca, cc):
                        out |= 1 << moved[idx]
                if xa or xc:
                    out |= 1 << t
                tab.append([out])
        else:
            t1, t2 = dst[a], dst[b]
            if t1 == t2:
                raise KhError("non-orientable cube edge; diagram is not planar")
            for L in range(1 << m):
                base = 0
                for idx in iter_bits(L):
                    if idx != ca:
                        base |= 1 << moved[idx]
                if (L >> ca) & 1:
                    tab.append([base | (1 << t1) | (1 << t2)])
                else:
                    tab.append([base | (1 << t1), base | (1 << t2)])
        self._tables[key] = tab
        return tab


@lru_cache(maxsize=64)
def cube_of(d):
    return Cube(d)


# ---------------------------------------------------------------------------
# complexes


def _apply_f2(images, vec):
    out = 0
    for b in iter_bits(vec):
        out ^= images[b]
    return out


class ChainComplex:
    """Bigraded complex with one block of generators per bidegree.

    ``blocks[(i, j)]`` lists generator keys; ``diff[(i, j)]`` lists, for
    each generator, its image in block ``(i + 1, j)``.  Over F2 an image is
    a bitmask over local indices; over Z it is a dict index -> coefficient.
    """

    def __init__(self, ring, blocks, diff, diagram=None, kind="full", jshift=0):
        self.ring = ring
        self.blocks = blocks
        self.diff = diff
        self.diagram = diagram
        self.kind = kind
        self.jshift = jshift
        self.index = {bd: {g: k for k, g in enumerate(gs)} for bd, gs in blocks.items()}

    def bidegrees(self):
        return sorted(self.blocks)

    def dim(self, bd):
        return len(self.blocks.get(bd, ()))

    @property
    def total_dim(self):
        return sum(len(g) for g in self.blocks.values())

    def locate(self, gen, j_hint=None):
        for bd, idx in self.index.items():
            if gen in idx:
                return bd, idx[gen]
        raise KeyError(gen)

    def matrix(self, i, j):
        """Differential ``(i, j) -> (i + 1, j)`` as a dense-row matrix."""
        rows = self.dim((i + 1, j))
        imgs = self.diff.get((i, j), [])
        if self.ring == "F2":
            return MatrixF2.from_columns(rows, imgs)
        ent = {}
        for c, img in enumerate(imgs):
            for r, v in img.items():
                ent.setdefault(r, {})[c] = v
        return MatrixZ(rows, len(imgs), ent)

    def check_d_squared(self):
        """True iff every composite of consecutive differentials vanishes."""
        for (i, j), imgs in self.diff.items():
            nxt = self.diff.get((i + 1, j))
            if nxt is None:
                continue
            for img in imgs:
                if self.ring == "F2":
                    if _apply_f2(nxt, img):
                        return False
                else:
                    acc = {}
                    for r, v in img.items():
                        for t, w in nxt[r].items():
                            acc[t] = acc.get(t, 0) + v * w
                    if any(acc.values()):
                        return False
        return True

    def mod2(self):
        if self.ring == "F2":
            return self
        diff = {}
        for bd, imgs in self.diff.items():
            diff[bd] = [sum(1 << r for r, v in img.items() if v % 2) for img in imgs]
        return ChainComplex("F2", self.blocks, diff, self.diagram, self.kind, self.jshift)

    def homology(self):
        if self.ring == "F2":
            return HomologyF2(self)
        return integral_homology(self)


def _gradings(d, cube, v, L):
    m = cube.n_circles(v)
    h = bin(v).count("1")
    i = h - d.n_minus
    j = m - 2 * bin(L).count("1") + h + d.n_plus - 2 * d.n_minus
    return i, j


@lru_cache(maxsize=64)
def _raw_complex(d):
    """Generators per bidegree and signed differential terms, shared by both rings."""
    cube = cube_of(d)
    n = cube.n
    blocks = {}
    for v in range(1 << n):
        for L in range(1 << cube.n_circles(v)):
            blocks.setdefault(_gradings(d, cube, v, L), []).append((v, L))
    for bd, gs in blocks.items():
        m_key = lambda g: (_vkey(g[0], n), _vkey(g[1], cube.n_circles(g[0])))
        gs.sort(key=m_key)
    index = {bd: {g: k for k, g in enumerate(gs)} for bd, gs in blocks.items()}
    terms = {}
    for (i, j), gs in blocks.items():
        tgt = index.get((i + 1, j), {})
        out = []
        for v, L in gs:
            img = {}
            for k in range(n):
                if (v >> k) & 1:
                    continue
                w = v | (1 << k)
                sign = -1 if bin(v & ((1 << k) - 1)).count("1") % 2 else 1
                for L2 in cube.edge_table(v, k)[L]:
                    t = tgt[(w, L2)]
                    img[t] = img.get(t, 0) + sign
            out.append({t: c for t, c in img.items() if c})
        terms[(i, j)] = out
    return blocks, terms


def build_complex(d, ring="F2"):
    """Khovanov complex of ``d`` over ``"F2"`` or ``"Z"``.

    Complexes are cached per diagram and must be treated as immutable.
    """
    ring = ring.upper()
    if ring not in ("F2", "Z"):
        raise ValueError(f"unknown ring {ring!r}")
    return _build_complex(d, ring)


@lru_cache(maxsize=64)
def _build_complex(d, ring):
    blocks, terms = _raw_complex(d)
    blocks = {bd: list(gs) for bd, gs in blocks.items()}
    if ring == "Z":
        diff = {bd: [dict(t) for t in ts] for bd, ts in terms.items()}
    else:
        diff = {
            bd: [sum(1 << r for r, v in t.items() if v % 2) for t in ts]
            for bd, ts in terms.items()
        }
    return ChainComplex(ring, blocks, diff, d)


def _bp_circle(cube, basepoint, v):
    return cube.circle_of[v][basepoint]


def _require_bp(c, basepoint):
    d = c.diagram
    if basepoint is None:
        basepoint = d.basepoint if d is not None else None
    if basepoint is None or d is None or basepoint not in d.edges:
        raise MissingBasepoint(f"basepoint {basepoint!r} is not an edge of the diagram")
    return basepoint


def _subquotient(c, basepoint, keep_x):
    """Generators whose basepoint circle is labelled X (``keep_x``) or 1."""
    cube = cube_of(c.diagram)
    shift = 1 if keep_x else -1
    blocks = {}
    old_pos = {}
    for (i, j), gs in c.blocks.items():
        sel = [
            (k, g)
            for k, g in enumerate(gs)
            if bool((g[1] >> _bp_circle(cube, basepoint, g[0])) & 1) == keep_x
        ]
        if sel:
            blocks[(i, j + shift)] = [g for _, g in sel]
            old_pos[(i, j)] = [k for k, _ in sel]
    diff = {}
    for (i, j), ks in old_pos.items():
        nxt = old_pos.get((i + 1, j), [])
        remap = {k: r for r, k in enumerate(nxt)}
        imgs = c.diff[(i, j)]
        out = []
        for k in ks:
            img = imgs[k]
            if c.ring == "F2":
                new = 0
                for b in iter_bits(img):
                    r = remap.get(b)
                    if r is not None:
                        new |= 1 << r
                    elif keep_x:
                        raise KhError("X-labelled generators do not form a subcomplex")
                out.append(new)
            else:
                new = {}
                for b, val in img.items():
                    r = remap.get(b)
                    if r is not None:
                        new[r] = val
                    elif keep_x:
                        raise KhError("X-labelled generators do not form a subcomplex")
                out.append(new)
        diff[(i, j + shift)] = out
    kind = "reduced" if keep_x else "quotient"
    return ChainComplex(c.ring, blocks, diff, c.diagram, kind, c.jshift + shift)


def reduced_complex(c, basepoint=None):
    """Subcomplex where the basepoint circle carries X, quantum grading +1."""
    basepoint = _require_bp(c, basepoint)
    return _subquotient(c, basepoint, True)


def quotient_complex(c, basepoint=None):
    """Quotient by the reduced subcomplex (basepoint circle labelled 1), grading -1."""
    basepoint = _require_bp(c, basepoint)
    return _subquotient(c, basepoint, False)


# ---------------------------------------------------------------------------
# chain maps


class ChainMap:
    """F2 chain map; ``maps[(i, j)]`` lists images in target block ``(i + di, j + dj)``."""

    def __init__(self, source, target, maps, shift=(0, 0), name=""):
        self.source = source
        self.target = target
        self.maps = maps
        self.shift = tuple(shift)
        self.name = name

    def image(self, bd, vec):
        imgs = self.maps.get(bd)
        if imgs is None:
            return 0
        return _apply_f2(imgs, vec)

    def is_chain_map(self):
        di, dj = self.shift
        s, t = self.source, self.target
        for (i, j), gs in s.blocks.items():
            f_here = self.maps.get((i, j), [0] * len(gs))
            f_next = self.maps.get((i + 1, j), [0] * s.dim((i + 1, j)))
            d_s = s.diff.get((i, j), [0] * len(gs))
            d_t = t.diff.get((i + di, j + dj))
            for k in range(len(gs)):
                lhs = _apply_f2(d_t, f_here[k]) if d_t is not None else 0
                rhs = _apply_f2(f_next, d_s[k]) if d_s[k] else 0
                if lhs != rhs:
                    return False
        return True

    def compose(self, other):
        """``other`` after ``self``."""
        if other.source is not self.target and not _same_shape(other.source, self.target):
            raise ComplexMismatch("composition of maps with mismatched complexes")
        di, dj = self.shift
        maps = {}
        for bd, imgs in self.maps.items():
            mid = (bd[0] + di, bd[1] + dj)
            nxt = other.maps.get(mid)
            if nxt is None:
                maps[bd] = [0] * len(imgs)
            else:
                maps[bd] = [_apply_f2(nxt, x) for x in imgs]
        shift = (di + other.shift[0], dj + other.shift[1])
        return ChainMap(self.source, other.target, maps, shift, f"{other.name}*{self.name}")

    def __matmul__(self, other):
        return other.compose(self)

    def matrix(self, bd):
        di, dj = self.shift
        rows = self.target.dim((bd[0] + di, bd[1] + dj))
        return MatrixF2.from_columns(rows, self.maps.get(bd, [0] * self.source.dim(bd)))


def _same_shape(a, b):
    return a.blocks == b.blocks


def identity_map(c):
    maps = {bd: [1 << k for k in range(len(gs))] for bd, gs in c.blocks.items()}
    return ChainMap(c, c, maps, (0, 0), "id")


def _label_map(source, target, rule, shift):
    """Map built generator-wise from ``rule(v, L) -> list of (v, L)`` target keys."""
    maps = {}
    for (i, j), gs in source.blocks.items():
        tb = (i + shift[0], j + shift[1])
        tidx = target.index.get(tb, {})
        out = []
        for g in gs:
            vec = 0
            for h in rule(*g):
                vec ^= 1 << tidx[h]
            out.append(vec)
        maps[(i, j)] = out
    return ChainMap(source, target, maps, shift)


def x_action(c, basepoint=None):
    """Multiplication by X at the basepoint circle, bidegree (0, -2)."""
    if c.ring != "F2":
        raise ValueError("x_action is defined over F2")
    basepoint = _require_bp(c, basepoint)
    cube = cube_of(c.diagram)

    def rule(v, L):
        bit = 1 << _bp_circle(cube, basepoint, v)
        return [] if L & bit else [(v, L | bit)]

    f = _label_map(c, c, rule, (0, -2))
    f.name = "X"
    return f


def inclusion_map(red, full):
    """Inclusion of the reduced subcomplex, bidegree (0, -1)."""
    f = _label_map(red, full, lambda v, L: [(v, L)], (0, -1))
    f.name = "iota"
    return f


def projection_map(full, quot):
    """Projection onto the quotient (basepoint labelled 1), bidegree (0, -1)."""
    maps = {}
    for (i, j), gs in full.blocks.items():
        tidx = quot.index.get((i, j - 1), {})
        maps[(i, j)] = [(1 << tidx[g]) if g in tidx else 0 for g in gs]
    return ChainMap(full, quot, maps, (0, -1), "pi")


# ---------------------------------------------------------------------------
# homology


class HomologyF2:
    """F2 homology with explicit cycle representatives per bidegree."""

    def __init__(self, c):
        if c.ring != "F2":
            raise ValueError("HomologyF2 needs an F2 complex")
        self.complex = c
        self.reps = {}
        self._ech = {}
        for (i, j), gs in c.blocks.items():
            n = len(gs)
            out = c.diff.get((i, j), [0] * n)
            kernel, _ = kernel_and_image(out, range(n))
            ech = Echelon()
            for img in c.diff.get((i - 1, j), []):
                ech.add(img)
            reps = []
            for z in kernel:
                vec, tag = ech.reduce(z, 1 << len(reps))
                if vec:
                    ech.rows[vec.bit_length() - 1] = (vec, tag)
                    reps.append(z)
            self.reps[(i, j)] = reps
            self._ech[(i, j)] = ech

    @property
    def dims(self):
        return {bd: len(r) for bd, r in sorted(self.reps.items()) if r}

    def dim(self, bd):
        return len(self.reps.get(bd, ()))

    @property
    def total_dim(self):
        return sum(len(r) for r in self.reps.values())

    def coords(self, bd, cycle):
        """Coordinates (bitmask over reps) of a cycle modulo boundaries."""
        ech = self._ech.get(bd)
        if ech is None:
            if cycle:
                raise KhError(f"no generators in bidegree {bd}")
            return 0
        rest, tag = ech.reduce(cycle)
        if rest:
            raise NotAChainMap(f"vector in {bd} is not a cycle")
        return tag

    def records(self):
        return [{"i": i, "j": j, "dim": n} for (i, j), n in self.dims.items()]


def induced_matrices(f, hs=None, ht=None):
    """Per-bidegree homology matrices of an F2 chain map."""
    if not f.is_chain_map():
        raise NotAChainMap(f"map {f.name or '?'} fails the chain-map equation")
    hs = hs or HomologyF2(f.source)
    ht = ht or HomologyF2(f.target)
    di, dj = f.shift
    out = {}
    for bd, reps in hs.reps.items():
        if not reps:
            continue
        tb = (bd[0] + di, bd[1] + dj)
        cols = [ht.coords(tb, f.image(bd, z)) for z in reps]
        out[bd] = MatrixF2.from_columns(ht.dim(tb), cols)
    return out


def integral_homology(c):
    """``{(i, j): factors}`` with 0 standing for a free summand."""
    if c.ring != "Z":
        raise ValueError("integral_homology needs a Z complex")
    ranks = {}
    tors = {}
    for (i, j) in c.blocks:
        fac = invariant_factors(c.matrix(i, j))
        ranks[(i, j)] = len(fac)
        tors[(i + 1, j)] = [x for x in fac if x > 1]
    out = {}
    for (i, j), gs in c.blocks.items():
        free = len(gs) - ranks[(i, j)] - ranks.get((i - 1, j), 0)
        factors = [0] * free + sorted(tors.get((i, j), []))
        if factors:
            out[(i, j)] = factors
    return dict(sorted(out.items()))


def integral_records(h):
    return [{"i": i, "j": j, "factors": f} for (i, j), f in h.items()]


def khovanov_homology(d, ring="F2", reduced=False, basepoint=None):
    """Convenience wrapper: build, optionally reduce, take homology."""
    c = build_complex(d, ring)
    if reduced:
        c = reduced_complex(c, basepoint)
    return c.homology()


# ---------------------------------------------------------------------------
# Shumakovitch checks


def verify_shumakovitch(d, basepoint=None):
    """Exactness of the X-sequence, the splitting of dims, and iota/pi on homology.

    Returns a report dict; raises :class:`CheckFailed` naming the bidegree.
    """
    c = build_complex(d, "F2")
    basepoint = _require_bp(c, basepoint)
    red = reduced_complex(c, basepoint)
    quot = quotient_complex(c, basepoint)
    h, hr, hq = HomologyF2(c), HomologyF2(red), HomologyF2(quot)
    x = x_action(c, basepoint)
    if not x.is_chain_map():
        raise CheckFailed("X-action does not commute with the differential")
    xm = induced_matrices(x, h, h)
    rank = {bd: m.rank() for bd, m in xm.items()}
    for bd in h.dims:
        i, j = bd
        kernel = h.dim(bd) - rank.get(bd, 0)
        incoming = rank.get((i, j + 2), 0)
        if kernel != incoming:
            raise CheckFailed(
                f"ker X has dim {kernel} but im X has dim {incoming}", bd
            )
    support = set(h.dims) | {(i, j + s) for (i, j) in hr.dims for s in (-1, 1)}
    for bd in sorted(support):
        i, j = bd
        lhs = h.dim(bd)
        rhs = hr.dim((i, j - 1)) + hr.dim((i, j + 1))
        if lhs != rhs:
            raise CheckFailed(f"dim Kh = {lhs} but reduced sum = {rhs}", bd)
    for bd, m in induced_matrices(inclusion_map(red, c), hr, h).items():
        if m.rank() != hr.dim(bd):
            raise CheckFailed("inclusion is not injective on homology", bd)
    pm = induced_matrices(projection_map(c, quot), h, hq)
    for bd in hq.dims:
        src = (bd[0], bd[1] + 1)
        r = pm[src].rank() if src in pm else 0
        if r != hq.dim(bd):
            raise CheckFailed("projection is not surjective on homology", bd)
    return {
        "basepoint": basepoint,
        "kh": h.records(),
        "reduced": hr.records(),
        "passed": True,
    }

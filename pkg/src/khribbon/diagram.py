"""Planar diagrams and 4-ended tangles in PD notation.

A crossing ``X[a,b,c,d]`` lists its four edges counterclockwise, starting
at the incoming under-strand.  Crossingless closed components cannot be
written as crossings, so they are carried as separate loop edge ids
(``U`` or ``U[e]`` tokens in the text format).

Orientation is stored per crossing: ``signs[c]`` is +1 when the over-strand
enters at position 3 and leaves at position 1, and -1 otherwise.  Together
with the normalized tuples this fixes the direction of every edge.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import cached_property
from itertools import chain, permutations, product

ENDS = ("NW", "NE", "SW", "SE")


class DiagramError(ValueError):
    """Base class for diagram validation failures."""


class MalformedCrossing(DiagramError):
    pass


class DanglingEdge(DiagramError):
    pass


class OrientationConflict(DiagramError):
    pass


class BadBasepoint(DiagramError):
    pass


# ---------------------------------------------------------------------------
# orientation machinery shared by diagrams and tangles


def _occurrences(raw):
    occ = {}
    for c, tup in enumerate(raw):
        for p, e in enumerate(tup):
            occ.setdefault(e, []).append((c, p))
    return occ


def _other(occ, e, o):
    for x in occ[e]:
        if x != o:
            return x
    return None


def _walk(raw, occ, e, u, w):
    """Traverse forward from edge ``e`` (leaving ``u``, arriving at ``w``).

    Returns the list of steps ``(edge, from, to)`` until the strand closes up
    or runs into an open end.
    """
    steps = []
    start = (e, u)
    while True:
        steps.append((e, u, w))
        if w is None:
            return steps
        c, p = w
        u = (c, (p + 2) % 4)
        e = raw[c][u[1]]
        w = _other(occ, e, u)
        if (e, u) == start:
            return steps


def _strands(raw, occ=None):
    """Components of the crossing graph as traversal step lists.

    Open strands (tangles) come first, started from their smallest open edge
    and walked inwards; closed components follow, ordered by minimal edge.
    """
    occ = _occurrences(raw) if occ is None else occ
    seen = set()
    comps = []
    for e in sorted(occ):
        if len(occ[e]) == 1 and e not in seen:
            steps = _walk(raw, occ, e, None, occ[e][0])
            seen.update(s[0] for s in steps)
            comps.append(steps)
    for e in sorted(occ):
        if e not in seen:
            o1, o2 = sorted(occ[e])
            steps = _walk(raw, occ, e, o1, o2)
            seen.update(s[0] for s in steps)
            comps.append(steps)
    return comps


def _choose_direction(steps, hints):
    for hint in hints:
        for e, u, w in steps:
            if e in hint:
                o, is_head = hint[e]
                if o == w and o is not None:
                    return 1 if is_head else -1
                if o == u and o is not None:
                    return -1 if is_head else 1
    for e, u, w in steps:
        if w is not None and w[1] % 2 == 0:
            return 1 if w[1] == 0 else -1
    return 1


def _orient(raw, hints=(), strict=False, flip=()):
    """Normalize raw crossings and compute signs.

    ``raw`` tuples must list edges counterclockwise with the under-strand at
    positions 0 and 2.  Each strand's direction comes from the first hint
    table mentioning one of its edges (``edge -> (occurrence, is_head)``),
    else from its first under-passage read as incoming at position 0.
    ``flip`` reverses the listed strand indices afterwards.  With
    ``strict`` every under-passage must already read as incoming at 0.
    """
    occ = _occurrences(raw)
    head = {}
    for idx, steps in enumerate(_strands(raw, occ)):
        d = _choose_direction(steps, hints)
        if idx in flip:
            d = -d
        for e, u, w in steps:
            head[e] = w if d == 1 else u
    crossings, signs = [], []
    for c, tup in enumerate(raw):
        rot = 0 if head[tup[0]] == (c, 0) else 2
        if rot and strict:
            raise OrientationConflict(
                f"crossing {c} X{list(tup)}: under-strand leaves at position 0"
            )
        over_in = 1 if head[tup[1]] == (c, 1) else 3
        if head[tup[over_in]] != (c, over_in) or head.get(tup[(over_in + 2) % 4]) == (
            c,
            (over_in + 2) % 4,
        ):
            raise OrientationConflict(f"crossing {c}: inconsistent over-strand")
        crossings.append(tup[rot:] + tup[:rot])
        signs.append(1 if (over_in - rot) % 4 == 3 else -1)
    return tuple(crossings), tuple(signs)


def _parse_crossing(tok):
    m = re.fullmatch(r"X\[(.*)\]", tok)
    if not m:
        raise MalformedCrossing(f"cannot parse token {tok!r}")
    try:
        edges = tuple(int(x) for x in m.group(1).split(","))
    except ValueError:
        raise MalformedCrossing(f"non-integer edge in {tok!r}") from None
    if len(edges) != 4:
        raise MalformedCrossing(f"crossing {tok!r} has {len(edges)} edges, expected 4")
    if any(e <= 0 for e in edges):
        raise MalformedCrossing(f"edge ids must be positive in {tok!r}")
    return edges


# ---------------------------------------------------------------------------


class _Oriented:
    """Shared derived data for diagrams and tangles."""

    crossings: tuple
    signs: tuple

    @cached_property
    def occ(self):
        return _occurrences(self.crossings)

    @cached_property
    def head(self):
        """edge -> occurrence ``(crossing, position)`` where it enters, or None."""
        head = {}
        for c, (tup, s) in enumerate(zip(self.crossings, self.signs)):
            head[tup[0]] = (c, 0)
            over_in = 3 if s > 0 else 1
            head[tup[over_in]] = (c, over_in)
        for e, os in self.occ.items():
            head.setdefault(e, None)
        return head

    def tail(self, e):
        h = self.head[e]
        if h is None:
            return self.occ[e][0]
        return _other(self.occ, e, h)

    @cached_property
    def strands(self):
        """Components of the crossing graph as oriented edge sequences."""
        out = []
        for steps in _strands(self.crossings, self.occ):
            e, u, w = steps[0]
            edges = [s[0] for s in steps]
            if self.head[e] == w:
                out.append(tuple(edges))
            elif w is None or u is None:
                out.append(tuple(edges[::-1]))
            else:
                # closed strand walked backwards: keep the starting edge first
                out.append(tuple([edges[0]] + edges[:0:-1]))
        return out

    def _hints(self, offset=0, rename=None):
        rename = rename or {}
        hint = {}
        for e, os in self.occ.items():
            h = self.head[e]
            if h is not None:
                hint[rename.get(e, e)] = ((h[0] + offset, h[1]), True)
            else:
                t = os[0]
                hint[rename.get(e, e)] = ((t[0] + offset, t[1]), False)
        return hint

    def _over_only(self):
        """Indices of strands that never pass under a crossing."""
        out = []
        for idx, edges in enumerate(self.strands):
            if all(
                all(p % 2 for _, p in self.occ[e]) for e in edges
            ):
                out.append(idx)
        return out

    def _or_overrides(self):
        """Strands whose stored direction differs from the parse default."""
        if not self.crossings:
            return []
        flips = []
        steps_list = _strands(self.crossings, self.occ)
        for idx in self._over_only():
            e, u, w = steps_list[idx][0]
            default_head = w
            if self.head[e] != default_head:
                flips.append(idx)
        return flips

    @property
    def n_crossings(self):
        return len(self.crossings)

    @property
    def n_plus(self):
        return sum(1 for s in self.signs if s > 0)

    @property
    def n_minus(self):
        return sum(1 for s in self.signs if s < 0)


@dataclass(frozen=True)
class Diagram(_Oriented):
    """A closed link diagram.

    ``crossings`` are normalized PD tuples, ``signs`` the crossing signs,
    ``loops`` the edge ids of crossingless components.
    """

    crossings: tuple = ()
    signs: tuple = ()
    loops: tuple = ()
    basepoint: int | None = None

    def __post_init__(self):
        if len(self.signs) != len(self.crossings):
            raise OrientationConflict("one sign per crossing required")
        for e, os in self.occ.items():
            if len(os) != 2:
                raise DanglingEdge(f"edge {e} occurs {len(os)} times, expected 2")
        if len(set(self.loops)) != len(self.loops) or set(self.loops) & set(self.occ):
            raise DanglingEdge("loop ids must be distinct and unused by crossings")
        if list(self.loops) != sorted(self.loops):
            object.__setattr__(self, "loops", tuple(sorted(self.loops)))
        heads = self.head
        for e, os in self.occ.items():
            if heads[e] is None:
                raise OrientationConflict(f"edge {e} has no incoming end")
        n_heads = {}
        for c, (tup, s) in enumerate(zip(self.crossings, self.signs)):
            over_in = 3 if s > 0 else 1
            for p in (0, over_in):
                n_heads[tup[p]] = n_heads.get(tup[p], 0) + 1
        for e, k in n_heads.items():
            if k != 1:
                raise OrientationConflict(f"edge {e} enters {k} crossings")
        if self.basepoint is not None and self.basepoint not in self.edges:
            raise BadBasepoint(f"basepoint {self.basepoint} is not an edge")

    @classmethod
    def from_raw(cls, raw, loops=(), basepoint=None, hints=(), strict=False, flip=()):
        raw = [tuple(t) for t in raw]
        for e, os in _occurrences(raw).items():
            if len(os) != 2:
                raise DanglingEdge(f"edge {e} occurs {len(os)} times, expected 2")
        crossings, signs = _orient(raw, hints, strict, flip)
        return cls(crossings, signs, tuple(sorted(loops)), basepoint)

    @cached_property
    def edges(self):
        return tuple(sorted(chain(self.occ, self.loops)))

    @cached_property
    def components(self):
        """Oriented edge sequences, crossing components first, then loops."""
        return list(self.strands) + [(o,) for o in self.loops]

    def component_of(self, e):
        for idx, comp in enumerate(self.components):
            if e in comp:
                return idx
        raise KeyError(e)

    @cached_property
    def faces(self):
        """Faces as tuples of darts ``(edge, s)``, face kept on the left.

        ``s`` is +1 when the dart runs along the edge's orientation.
        Crossingless loops do not contribute.
        """
        seen = set()
        faces = []
        for e in sorted(self.occ):
            for start in self.occ[e]:
                if (e, start) in seen:
                    continue
                face = []
                cur, frm = e, start
                while (cur, frm) not in seen:
                    seen.add((cur, frm))
                    to = _other(self.occ, cur, frm)
                    face.append((cur, 1 if self.head[cur] == to else -1))
                    c, p = to
                    frm = (c, (p - 1) % 4)
                    cur = self.crossings[c][frm[1]]
                faces.append(tuple(face))
        return faces

    def is_planar(self):
        """Euler characteristic check on every connected piece of the diagram."""
        if not self.crossings:
            return True
        parent = list(range(len(self.crossings)))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for os in self.occ.values():
            a, b = find(os[0][0]), find(os[1][0])
            parent[a] = b
        pieces = len({find(c) for c in range(len(self.crossings))})
        n = len(self.crossings)
        return n - 2 * n + len(self.faces) == 2 * pieces

    def with_basepoint(self, e):
        return Diagram(self.crossings, self.signs, self.loops, e)

    def serialize(self):
        toks = ["X[%d,%d,%d,%d]" % t for t in self.crossings]
        toks += ["U[%d]" % o for o in self.loops]
        if self.basepoint is not None:
            toks.append("bp=%d" % self.basepoint)
        toks += ["or=%d:-" % idx for idx in self._or_overrides()]
        return ";".join(toks)

    def __str__(self):
        return self.serialize()


@dataclass(frozen=True)
class Tangle(_Oriented):
    """A 4-ended tangle; ``ends`` lists the edges at NW, NE, SW, SE."""

    crossings: tuple = ()
    signs: tuple = ()
    ends: tuple = ()

    def __post_init__(self):
        if len(self.ends) != 4:
            raise DanglingEdge("a tangle needs exactly four ends")
        if len(self.signs) != len(self.crossings):
            raise OrientationConflict("one sign per crossing required")
        named = {}
        for e in self.ends:
            named[e] = named.get(e, 0) + 1
        for e, os in self.occ.items():
            if len(os) + named.get(e, 0) != 2:
                raise DanglingEdge(f"edge {e}: {len(os)} crossings, {named.get(e, 0)} ends")
        for e, k in named.items():
            if e not in self.occ and k != 2:
                raise DanglingEdge(f"crossingless strand {e} must name two ends")
        open_edges = {e for e, os in self.occ.items() if len(os) == 1}
        covered = set()
        for edges in self.strands:
            if edges[0] not in open_edges:
                raise DanglingEdge("tangles may not contain closed components")
            covered.update(edges)

    @classmethod
    def from_raw(cls, raw, ends, hints=(), strict=False, flip=()):
        raw = [tuple(t) for t in raw]
        crossings, signs = _orient(raw, hints, strict, flip) if raw else ((), ())
        return cls(crossings, signs, tuple(ends))

    @property
    def boundary(self):
        return dict(zip(ENDS, self.ends))

    @cached_property
    def max_edge(self):
        return max(chain(self.occ, self.ends))

    def serialize(self):
        toks = ["X[%d,%d,%d,%d]" % t for t in self.crossings]
        toks.append("ends[%d,%d,%d,%d]" % self.ends)
        toks += ["or=%d:-" % idx for idx in self._or_overrides()]
        return ";".join(toks)

    def __str__(self):
        return self.serialize()


# ---------------------------------------------------------------------------
# text format


def _tokens(text):
    return [t.strip() for t in re.split(r"[;\n]", text) if t.strip()]


def _parse_common(text):
    raw, loops_auto, loops, flips = [], 0, [], []
    bp = ends = None
    for tok in _tokens(text):
        if tok.startswith("X"):
            raw.append(_parse_crossing(tok))
        elif tok == "U":
            loops_auto += 1
        elif tok.startswith("U["):
            m = re.fullmatch(r"U\[(\d+)\]", tok)
            if not m:
                raise MalformedCrossing(f"cannot parse loop {tok!r}")
            loops.append(int(m.group(1)))
        elif tok.startswith("bp="):
            bp = int(tok[3:])
        elif tok.startswith("or="):
            m = re.fullmatch(r"or=(\d+):([+-])", tok)
            if not m:
                raise MalformedCrossing(f"cannot parse orientation override {tok!r}")
            if m.group(2) == "-":
                flips.append(int(m.group(1)))
        elif tok.startswith("ends["):
            m = re.fullmatch(r"ends\[(\d+),(\d+),(\d+),(\d+)\]", tok)
            if not m:
                raise MalformedCrossing(f"cannot parse ends {tok!r}")
            ends = tuple(int(x) for x in m.groups())
        else:
            raise MalformedCrossing(f"unknown token {tok!r}")
    return raw, loops_auto, loops, bp, flips, ends


def _strict_then_flip(raw, flips):
    crossings, signs = _orient(raw, strict=True)
    if not flips:
        return crossings, signs
    return _orient(list(crossings), flip=set(flips))


def parse_diagram(text):
    """Parse the PD text format into a validated :class:`Diagram`."""
    raw, n_auto, loops, bp, flips, ends = _parse_common(text)
    if ends is not None:
        raise MalformedCrossing("ends[...] belongs to tangles")
    occ = _occurrences(raw)
    for e, os in occ.items():
        if len(os) != 2:
            raise DanglingEdge(f"edge {e} occurs {len(os)} times, expected 2")
    top = max(chain(occ, loops), default=0)
    loops = loops + [top + k + 1 for k in range(n_auto)]
    crossings, signs = _strict_then_flip(raw, flips) if raw else ((), ())
    return Diagram(crossings, signs, tuple(sorted(loops)), bp)


def parse_tangle(text):
    raw, n_auto, loops, bp, flips, ends = _parse_common(text)
    if ends is None:
        raise DanglingEdge("tangle text needs ends[nw,ne,sw,se]")
    if n_auto or loops or bp is not None:
        raise MalformedCrossing("tangles carry no loops or basepoint")
    occ = _occurrences(raw)
    for e, os in occ.items():
        if len(os) > 2:
            raise DanglingEdge(f"edge {e} occurs {len(os)} times")
    crossings, signs = _strict_then_flip(raw, flips) if raw else ((), ())
    return Tangle(crossings, signs, ends)


# ---------------------------------------------------------------------------
# gluing


class _UF:
    def __init__(self):
        self.parent = {}

    def find(self, x):
        self.parent.setdefault(x, x)
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            lo, hi = min(ra, rb), max(ra, rb)
            self.parent[hi] = lo


def _shifted(t, shift):
    ren = {e: e + shift for e in chain(t.occ, t.ends)}
    raw = [tuple(ren[e] for e in tup) for tup in t.crossings]
    ends = tuple(ren[e] for e in t.ends)
    return raw, ends, ren


def _merge(raw, joins, all_edges):
    uf = _UF()
    for e in all_edges:
        uf.find(e)
    for a, b in joins:
        uf.union(a, b)
    raw = [tuple(uf.find(e) for e in tup) for tup in raw]
    return raw, uf


def _remap_hints(hint, uf):
    out = {}
    for e, v in hint.items():
        out.setdefault(uf.find(e), v)
    return out


def partial_sum(t1, t2):
    """``t1 +p t2``: t1's NE end joins t2's NW end, t1's SE joins t2's SW."""
    shift = t1.max_edge
    raw2, ends2, ren = _shifted(t2, shift)
    nw1, ne1, sw1, se1 = t1.ends
    nw2, ne2, sw2, se2 = ends2
    raw = list(t1.crossings) + raw2
    edges = set(chain(t1.occ, t1.ends, ren.values()))
    raw, uf = _merge(raw, [(ne1, nw2), (se1, sw2)], edges)
    hints = [
        _remap_hints(t1._hints(), uf),
        _remap_hints(t2._hints(len(t1.crossings), ren), uf),
    ]
    ends = tuple(uf.find(e) for e in (nw1, ne2, sw1, se2))
    return Tangle.from_raw(raw, ends, hints)


def _close(raw, joins, edges, hints, basepoint=None):
    raw, uf = _merge(raw, joins, edges)
    occ = _occurrences(raw)
    loops = sorted({uf.find(e) for e in edges} - set(occ))
    hints = [_remap_hints(h, uf) for h in hints]
    return Diagram.from_raw(raw, loops, basepoint, hints), uf


def tangle_sum(t1, t2):
    """Close two tangles against each other, joining like-named ends.

    For a planar result the second tangle's ends must be labelled as seen
    from outside the first tangle's disk (left-right mirrored).
    """
    shift = t1.max_edge
    raw2, ends2, ren = _shifted(t2, shift)
    raw = list(t1.crossings) + raw2
    edges = set(chain(t1.occ, t1.ends, ren.values()))
    hints = [t1._hints(), t2._hints(len(t1.crossings), ren)]
    d, _ = _close(raw, list(zip(t1.ends, ends2)), edges, hints)
    return d


def closure(t, kind="denominator"):
    """Numerator closure joins NW-NE and SW-SE; denominator joins NW-SW, NE-SE."""
    nw, ne, sw, se = t.ends
    if kind == "numerator":
        joins = [(nw, ne), (sw, se)]
    elif kind == "denominator":
        joins = [(nw, sw), (ne, se)]
    else:
        raise ValueError(f"unknown closure kind {kind!r}")
    edges = set(chain(t.occ, t.ends))
    d, _ = _close(list(t.crossings), joins, edges, [t._hints()])
    return d


def closure_edges(t, kind="denominator"):
    """Edge ids the closure arcs receive, in join order."""
    nw, ne, sw, se = t.ends
    joins = [(nw, ne), (sw, se)] if kind == "numerator" else [(nw, sw), (ne, se)]
    edges = set(chain(t.occ, t.ends))
    _, uf = _merge(list(t.crossings), joins, edges)
    return tuple(uf.find(a) for a, _ in joins)


# ---------------------------------------------------------------------------
# isomorphism up to relabelling


def _canonical_from(d, order):
    """Relabel edges in traversal order of the given strand starts."""
    label = {}
    for e, u, w in order:
        for step in _walk(d.crossings, d.occ, e, u, w):
            label.setdefault(step[0], len(label) + 1)
    tuples = []
    for tup in d.crossings:
        t = tuple(label[e] for e in tup)
        tuples.append(min(t, t[2:] + t[:2]))
    return tuple(sorted(tuples))


def canonical_form(d):
    """Crossing data up to edge relabelling, crossing order and orientation."""
    occ = d.occ
    comps = _strands(d.crossings, occ)
    starts = []
    for steps in comps:
        opts = []
        for e, u, w in steps:
            opts.append((e, u, w))
            opts.append((e, w, u))
        starts.append(opts)
    best = None
    for perm in permutations(range(len(starts))):
        for chosen in product(*(starts[k] for k in perm)):
            form = _canonical_from(d, chosen)
            if best is None or form < best:
                best = form
    return (best or (), len(d.loops))


def is_isomorphic(d1, d2):
    return canonical_form(d1) == canonical_form(d2)

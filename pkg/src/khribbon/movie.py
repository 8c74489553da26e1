"""Elementary cobordism movies and their induced F2 chain maps.

Moves act on :class:`~khribbon.diagram.Diagram` objects by explicit local
edge data.  New crossings are always appended; removed crossings shift the
later indices down.

Reidemeister maps come from Gaussian elimination on the larger complex:
the cancelled pairs are chosen so that the pivot block is a signed
permutation, and the remaining generators are matched with those of the
smaller diagram.  The elimination runs over Z so that every F2 map is the
reduction of an integral one.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

from .diagram import Diagram, DiagramError, parse_diagram
from .khcomplex import (
    ChainMap,
    ComplexMismatch,
    KhError,
    NotAChainMap,
    _raw_complex,
    build_complex,
    cube_of,
    identity_map,
    induced_matrices,
    reduced_complex,
)

__all__ = [
    "Move",
    "Movie",
    "MovieError",
    "InvalidSite",
    "BasepointTouched",
    "NotAChainMap",
    "ComplexMismatch",
    "apply_move",
    "chain_map_of_move",
    "movie_chain_map",
    "induced_homology_map",
    "restrict_reduced",
    "is_ribbon",
    "saddle_is_valid",
    "touched_edges",
    "dumps_movie",
    "loads_movie",
    "reverse",
    "read_movie",
    "write_movie",
]

KINDS = (
    "birth",
    "death",
    "saddle",
    "r1_pos",
    "r1_neg",
    "r1_elim",
    "r2_intro",
    "r2_elim",
    "r3",
)


class MovieError(Exception):
    pass


class InvalidSite(MovieError):
    pass


class BasepointTouched(MovieError):
    pass


@dataclass(frozen=True)
class Move:
    """One movie frame change.

    ``edges`` are existing edge ids, ``new_edges`` ids the move creates and
    ``sides`` orientation/side data:

    ========== ================ ========================= ============
    kind       edges            new_edges                 sides
    ========== ================ ========================= ============
    birth      ()               (o,)
    death      (o,)             ()
    saddle     (a, b)           (c, d) or (c,)
    r1_pos/neg (e,)             (e1, k, e2) or (e1, k)    (+1 left / -1 right,)
    r1_elim    (k,)             (e,)
    r2_intro   (a, b)           (a1, a2, a3, b1, b2, b3)  (s_a, s_b)
    r2_elim    (a2, b2)         (a, b)
    r3         (a, b, c)        ()                        ()
    ========== ================ ========================= ============
    """

    kind: str
    edges: tuple = ()
    new_edges: tuple = ()
    sides: tuple = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidSite(f"unknown move kind {self.kind!r}")
        for name in ("edges", "new_edges", "sides"):
            object.__setattr__(self, name, tuple(int(x) for x in getattr(self, name)))

    def to_record(self):
        rec = {"move": self.kind}
        if self.edges:
            rec["edges"] = list(self.edges)
        if self.new_edges:
            rec["new_edges"] = list(self.new_edges)
        if self.sides:
            rec["sides"] = list(self.sides)
        return rec

    @classmethod
    def from_record(cls, rec):
        extra = set(rec) - {"move", "edges", "new_edges", "sides"}
        if "move" not in rec or extra:
            raise InvalidSite(f"bad move record {rec!r}")
        return cls(
            rec["move"],
            tuple(rec.get("edges", ())),
            tuple(rec.get("new_edges", ())),
            tuple(rec.get("sides", ())),
        )


# ---------------------------------------------------------------------------
# diagram-level moves


def _face_of(d, dart):
    for face in d.faces:
        if dart in face:
            return face
    return None


def _pieces(d):
    """edge -> connected piece id of the crossing graph (loops are their own piece)."""
    parent = list(range(d.n_crossings))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for os in d.occ.values():
        parent[find(os[0][0])] = find(os[1][0])
    out = {e: find(os[0][0]) for e, os in d.occ.items()}
    for o in d.loops:
        out[o] = ("loop", o)
    return out


def _check_new(d, new, reusable=()):
    if len(set(new)) != len(new):
        raise InvalidSite(f"new edge ids {new} repeat")
    taken = set(d.edges) - set(reusable)
    for e in new:
        if e <= 0:
            raise InvalidSite(f"edge id {e} must be positive")
        if e in taken:
            raise InvalidSite(f"new edge id {e} already in use")


def _require_edges(d, edges):
    for e in edges:
        if e not in d.edges:
            raise InvalidSite(f"edge {e} is not in the diagram")


def _rebuild(d, crossings, signs, loops):
    try:
        out = Diagram(tuple(crossings), tuple(signs), tuple(sorted(loops)), d.basepoint)
    except DiagramError as exc:
        raise InvalidSite(f"move produces an invalid diagram: {exc}") from None
    if not out.is_planar():
        raise InvalidSite("move produces a non-planar diagram")
    return out


def _renamed(d, by_occ, drop=()):
    """Crossing tuples with occurrences renamed, skipping crossing indices in ``drop``."""
    crossings, signs = [], []
    for c, (tup, s) in enumerate(zip(d.crossings, d.signs)):
        if c in drop:
            continue
        crossings.append(tuple(by_occ.get((c, p), e) for p, e in enumerate(tup)))
        signs.append(s)
    return crossings, signs


def _birth(d, m):
    if len(m.new_edges) != 1 or m.edges:
        raise InvalidSite("birth takes exactly one new loop id")
    _check_new(d, m.new_edges)
    return _rebuild(d, d.crossings, d.signs, d.loops + m.new_edges)


def _death(d, m):
    if len(m.edges) != 1 or m.new_edges:
        raise InvalidSite("death takes exactly one loop id")
    (o,) = m.edges
    if o not in d.loops:
        raise InvalidSite(f"edge {o} is not a crossingless loop")
    return _rebuild(d, d.crossings, d.signs, [x for x in d.loops if x != o])


def saddle_is_valid(d, a, b):
    """True iff a band between ``a`` and ``b`` can be oriented compatibly."""
    if a in d.loops or b in d.loops or a == b:
        return True
    pieces = _pieces(d)
    if pieces[a] != pieces[b]:
        return True
    for face in d.faces:
        for s in (1, -1):
            if (a, s) in face and (b, s) in face:
                return True
    return False


def _saddle(d, m):
    if len(m.edges) != 2:
        raise InvalidSite("saddle takes two edges")
    a, b = m.edges
    _require_edges(d, (a, b))
    loops = set(d.loops)
    if a in loops and b not in loops:
        a, b = b, a
    new = m.new_edges
    la, lb = a in loops, b in loops
    merges_two = a != b
    one_out = (la != lb) or (la and lb and merges_two)
    if len(new) != (1 if one_out else 2):
        raise InvalidSite(f"saddle on {m.edges} needs {1 if one_out else 2} new edge ids")
    _check_new(d, new, reusable=(a, b))
    if not saddle_is_valid(d, a, b):
        raise InvalidSite(f"edges {a} and {b} do not face each other antiparallel")
    by_occ = {}
    loops.discard(a)
    loops.discard(b)
    if not la and not lb and a != b:
        c, e = new
        by_occ[d.tail(a)] = c
        by_occ[d.head[b]] = c
        by_occ[d.tail(b)] = e
        by_occ[d.head[a]] = e
    elif not la and lb:
        (c,) = new
        by_occ[d.tail(a)] = c
        by_occ[d.head[a]] = c
    elif not la and a == b:
        c, e = new
        by_occ[d.tail(a)] = c
        by_occ[d.head[a]] = c
        loops.add(e)
    elif la and lb and a != b:
        loops.add(new[0])
    else:
        loops.update(new)
    crossings, signs = _renamed(d, by_occ)
    return _rebuild(d, crossings, signs, loops)


def _r1_tuple(positive, side, e1, k, e2):
    if side == 1:
        return (e1, e2, k, k) if positive else (k, e1, e2, k)
    return (k, k, e2, e1) if positive else (e1, k, k, e2)


def _r1_intro(d, m):
    if len(m.edges) != 1:
        raise InvalidSite("r1 takes one edge")
    (e,) = m.edges
    _require_edges(d, (e,))
    side = m.sides[0] if m.sides else 1
    if side not in (1, -1):
        raise InvalidSite("r1 side must be +1 (left) or -1 (right)")
    loop = e in d.loops
    new = m.new_edges
    if loop:
        if len(new) != 2:
            raise InvalidSite("r1 on a loop takes new ids (e1, k)")
        e1, k = new
        e2 = e1
    else:
        if len(new) != 3:
            raise InvalidSite("r1 takes new ids (e1, k, e2)")
        e1, k, e2 = new
    _check_new(d, new, reusable=(e,))
    positive = m.kind == "r1_pos"
    by_occ = {}
    if not loop:
        by_occ[d.tail(e)] = e1
        by_occ[d.head[e]] = e2
    crossings, signs = _renamed(d, by_occ)
    crossings.append(_r1_tuple(positive, side, e1, k, e2))
    signs.append(1 if positive else -1)
    loops = [o for o in d.loops if o != e]
    return _rebuild(d, crossings, signs, loops)


def _kink_data(d, k):
    """``(crossing, e_in, e_out)`` for a kink edge ``k``."""
    if k not in d.occ:
        raise InvalidSite(f"edge {k} is not a kink")
    (c1, p1), (c2, p2) = d.occ[k]
    if c1 != c2 or (p2 - p1) % 4 not in (1, 3):
        raise InvalidSite(f"edge {k} does not bound a monogon")
    tup = d.crossings[c1]
    rest = [p for p in range(4) if p not in (p1, p2)]
    e_in = e_out = None
    for p in rest:
        e = tup[p]
        if d.head[e] == (c1, p):
            e_in = e
        else:
            e_out = e
    if e_in is None or e_out is None:
        raise InvalidSite(f"edge {k}: malformed kink")
    return c1, e_in, e_out


def _join(d, removed, chains, names):
    """Remove crossings and merge edge chains running through them.

    ``chains`` are lists of edges that become one edge each; ``names`` the
    ids they receive.  Chains sharing an edge merge and take the first name.
    Returns ``(by_occ, new_loops)``.
    """
    parent = {}

    def find(x):
        parent.setdefault(x, x)
        while parent[x] != x:
            x = parent[x]
        return x

    for ch in chains:
        for e in ch[1:]:
            ra, rb = find(ch[0]), find(e)
            if ra != rb:
                parent[rb] = ra
    label = {}
    for ch, name in zip(chains, names):
        label.setdefault(find(ch[0]), name)
    by_occ = {}
    classes = {}
    for ch in chains:
        for e in ch:
            classes.setdefault(find(e), set()).add(e)
    loops = []
    for root, members in classes.items():
        name = label[root]
        kept = [o for e in members for o in d.occ.get(e, []) if o[0] not in removed]
        if not kept:
            loops.append(name)
        for o in kept:
            by_occ[o] = name
    return by_occ, loops


def _r1_elim(d, m):
    if len(m.edges) != 1 or len(m.new_edges) != 1:
        raise InvalidSite("r1_elim takes the kink edge and one new id")
    (k,) = m.edges
    c, e_in, e_out = _kink_data(d, k)
    _check_new(d, m.new_edges, reusable=(k, e_in, e_out))
    by_occ, new_loops = _join(d, {c}, [[e_in, k, e_out]], m.new_edges)
    crossings, signs = _renamed(d, by_occ, drop={c})
    return _rebuild(d, crossings, signs, list(d.loops) + new_loops)


def _r2_tuples(s_a, s_b, a1, a2, a3, b1, b2, b3):
    aw, ae = (a1, a3) if s_a == 1 else (a3, a1)
    bw, be = (b3, b1) if s_b == 1 else (b1, b3)
    if s_b == 1:
        x1, x2 = (b2, a2, bw, aw), (be, a2, b2, ae)
    else:
        x1, x2 = (bw, aw, b2, a2), (b2, ae, be, a2)
    return (x1, x2), (s_a * s_b, -s_a * s_b)


def _r2_intro(d, m):
    if len(m.edges) != 2 or len(m.new_edges) != 6 or len(m.sides) != 2:
        raise InvalidSite("r2_intro takes (a, b), six new ids and sides (s_a, s_b)")
    a, b = m.edges
    _require_edges(d, (a, b))
    s_a, s_b = m.sides
    if s_a not in (1, -1) or s_b not in (1, -1):
        raise InvalidSite("sides must be +1 or -1")
    if a == b:
        raise InvalidSite("r2_intro needs two distinct edges")
    a1, a2, a3, b1, b2, b3 = m.new_edges
    a_loop, b_loop = a in d.loops, b in d.loops
    if a_loop and a1 != a3:
        raise InvalidSite("finger of a loop: a1 and a3 must coincide")
    if b_loop and b1 != b3:
        raise InvalidSite("loop under a finger: b1 and b3 must coincide")
    if not (a_loop or b_loop):
        face = _face_of(d, (b, s_b))
        if face is None or (a, s_a) not in face:
            raise InvalidSite(f"darts ({a},{s_a}) and ({b},{s_b}) share no face")
    fresh = tuple(dict.fromkeys(m.new_edges))
    if len(fresh) != 6 - a_loop - b_loop:
        raise InvalidSite(f"new edge ids {m.new_edges} repeat")
    _check_new(d, fresh, reusable=(a, b))
    by_occ = {}
    for e, (first, last), is_loop in ((a, (a1, a3), a_loop), (b, (b1, b3), b_loop)):
        if not is_loop:
            by_occ[d.tail(e)] = first
            by_occ[d.head[e]] = last
    crossings, signs = _renamed(d, by_occ)
    tups, sg = _r2_tuples(s_a, s_b, a1, a2, a3, b1, b2, b3)
    crossings += list(tups)
    signs += list(sg)
    loops = [o for o in d.loops if o not in (a, b)]
    return _rebuild(d, crossings, signs, loops)


def _bigon_data(d, a2, b2):
    """Crossings and strand pieces of the bigon bounded by ``a2`` (over) and ``b2``."""
    for e in (a2, b2):
        if e not in d.occ:
            raise InvalidSite(f"edge {e} has no crossings")
    ca = {c for c, _ in d.occ[a2]}
    cb = {c for c, _ in d.occ[b2]}
    if len(ca) != 2 or ca != cb:
        raise InvalidSite(f"edges {a2}, {b2} do not span the same two crossings")
    if any(p % 2 == 0 for _, p in d.occ[a2]) or any(p % 2 for _, p in d.occ[b2]):
        raise InvalidSite(f"edge {a2} must pass over and {b2} under at both crossings")
    if not any(sorted(f) == sorted([(a2, s), (b2, t)]) for f in d.faces for s in (1, -1) for t in (1, -1)):
        raise InvalidSite(f"edges {a2}, {b2} do not bound a bigon face")

    def ends(e):
        tc, tp = d.tail(e)
        hc, hp = d.head[e]
        before = d.crossings[tc][(tp + 2) % 4]
        after = d.crossings[hc][(hp + 2) % 4]
        return before, after

    a1, a3 = ends(a2)
    b1, b3 = ends(b2)
    return sorted(ca), (a1, a3), (b1, b3)


def _r2_elim(d, m):
    if len(m.edges) != 2 or len(m.new_edges) != 2:
        raise InvalidSite("r2_elim takes (a2, b2) and two new ids")
    a2, b2 = m.edges
    xs, (a1, a3), (b1, b3) = _bigon_data(d, a2, b2)
    _check_new(d, m.new_edges, reusable=(a1, a2, a3, b1, b2, b3))
    by_occ, new_loops = _join(d, set(xs), [[a1, a2, a3], [b1, b2, b3]], m.new_edges)
    crossings, signs = _renamed(d, by_occ, drop=set(xs))
    return _rebuild(d, crossings, signs, list(d.loops) + new_loops)


def _r3(d, m):
    raise InvalidSite("r3 moves are not supported")


_APPLY = {
    "birth": _birth,
    "death": _death,
    "saddle": _saddle,
    "r1_pos": _r1_intro,
    "r1_neg": _r1_intro,
    "r1_elim": _r1_elim,
    "r2_intro": _r2_intro,
    "r2_elim": _r2_elim,
    "r3": _r3,
}


def touched_edges(d, m):
    """Edges of ``d`` that the move removes, renames or attaches to."""
    if m.kind in ("birth",):
        return set()
    if m.kind == "r1_elim":
        if m.edges and m.edges[0] in d.occ:
            _, e_in, e_out = _kink_data(d, m.edges[0])
            return {m.edges[0], e_in, e_out}
    if m.kind == "r2_elim" and len(m.edges) == 2:
        _, (a1, a3), (b1, b3) = _bigon_data(d, *m.edges)
        return {a1, a3, b1, b3, *m.edges}
    return set(m.edges)


def apply_move(d, m):
    """Apply one move; raises :class:`InvalidSite` or :class:`BasepointTouched`."""
    if d.basepoint is not None and d.basepoint in touched_edges(d, m):
        raise BasepointTouched(f"{m.kind} touches basepoint edge {d.basepoint}")
    return _APPLY[m.kind](d, m)


# ---------------------------------------------------------------------------
# movies


@dataclass(frozen=True)
class Movie:
    start: Diagram
    moves: tuple = ()
    frames: tuple = field(default=(), compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "moves", tuple(self.moves))
        frames = [self.start]
        for k, m in enumerate(self.moves):
            try:
                frames.append(apply_move(frames[-1], m))
            except MovieError as exc:
                raise type(exc)(f"move {k} ({m.kind}): {exc}") from None
        object.__setattr__(self, "frames", tuple(frames))

    @property
    def end(self):
        return self.frames[-1]

    @property
    def euler_char(self):
        births = sum(m.kind == "birth" for m in self.moves)
        deaths = sum(m.kind == "death" for m in self.moves)
        saddles = sum(m.kind == "saddle" for m in self.moves)
        return births + deaths - saddles

    def then(self, *moves):
        return Movie(self.start, self.moves + tuple(moves))


def is_ribbon(mv):
    """True iff the movie has no deaths (Reidemeister frames are allowed)."""
    return not any(m.kind == "death" for m in mv.moves)


def _inverse(pre, post, m):
    k = m.kind
    if k == "birth":
        return Move("death", m.new_edges)
    if k == "death":
        return Move("birth", (), m.edges)
    if k == "saddle":
        a, b = m.edges
        new = m.new_edges
        edges = new if len(new) == 2 else (new[0], new[0])
        return Move("saddle", edges, (a, b) if a != b else (a,))
    if k in ("r1_pos", "r1_neg"):
        return Move("r1_elim", (m.new_edges[1],), m.edges)
    if k == "r1_elim":
        (kink,) = m.edges
        c, e_in, e_out = _kink_data(pre, kink)
        tup = pre.crossings[c]
        positive = pre.signs[c] > 0
        side = 1 if tup == _r1_tuple(positive, 1, e_in, kink, e_out) else -1
        new = (e_in, kink) if e_in == e_out else (e_in, kink, e_out)
        return Move("r1_pos" if positive else "r1_neg", m.new_edges, new, (side,))
    if k == "r2_intro":
        a1, a2, a3, b1, b2, b3 = m.new_edges
        return Move("r2_elim", (a2, b2), m.edges)
    if k == "r2_elim":
        a2, b2 = m.edges
        xs, (a1, a3), (b1, b3) = _bigon_data(pre, a2, b2)
        (c_in,) = [c for c, p in pre.occ[b2] if p == 0]
        s_b = 1 if pre.crossings[c_in][1] == a2 else -1
        x1 = c_in if s_b == 1 else next(c for c in xs if c != c_in)
        s_a = pre.signs[x1] * s_b
        return Move("r2_intro", m.new_edges, (a1, a2, a3, b1, b2, b3), (s_a, s_b))
    raise InvalidSite(f"no inverse for {k}")


def reverse(mv):
    """The movie read backwards (births and deaths swap, saddles self-dual)."""
    moves = []
    for k in range(len(mv.moves) - 1, -1, -1):
        moves.append(_inverse(mv.frames[k], mv.frames[k + 1], mv.moves[k]))
    return Movie(mv.end, tuple(moves))


# ---------------------------------------------------------------------------
# movie files


def dumps_movie(mv):
    lines = [json.dumps({"start": mv.start.serialize()}, separators=(",", ":"))]
    for m in mv.moves:
        lines.append(json.dumps(m.to_record(), separators=(",", ":")))
    return "\n".join(lines) + "\n"


def loads_movie(text):
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise InvalidSite("empty movie file")
    try:
        header = json.loads(lines[0])
        records = [json.loads(ln) for ln in lines[1:]]
    except json.JSONDecodeError as exc:
        raise InvalidSite(f"movie file is not line-delimited JSON: {exc}") from None
    if not isinstance(header, dict) or "start" not in header:
        raise InvalidSite("movie header must carry the start diagram")
    start = parse_diagram(header["start"])
    return Movie(start, tuple(Move.from_record(r) for r in records))


def read_movie(path):
    with open(path) as fh:
        return loads_movie(fh.read())


def write_movie(mv, path):
    with open(path, "w") as fh:
        fh.write(dumps_movie(mv))


# ---------------------------------------------------------------------------
# chain maps of moves


def _transfer(cube_s, cube_t, v_s, v_t, emap):
    """Circle index map from a source resolution to a target one via edges."""
    out = []
    for circ in cube_s.circles[v_s]:
        idx = None
        for e in sorted(circ):
            t = emap(e)
            if t is not None:
                idx = cube_t.circle_of[v_t].get(t)
                if idx is not None:
                    break
        out.append(idx)
    return out


def _relabel(L, trans):
    out = 0
    for k, t in enumerate(trans):
        if (L >> k) & 1:
            out |= 1 << t
    return out


def _generator_map(src, tgt, shift, rule):
    cs, ct = build_complex(src, "F2"), build_complex(tgt, "F2")
    maps = {}
    for (i, j), gs in cs.blocks.items():
        tb = (i + shift[0], j + shift[1])
        tidx = ct.index.get(tb, {})
        out = []
        for g in gs:
            vec = 0
            for h in rule(*g):
                if h not in tidx:
                    raise ComplexMismatch(f"image {h} of {g} not in bidegree {tb}")
                vec ^= 1 << tidx[h]
            out.append(vec)
        maps[(i, j)] = out
    return ChainMap(cs, ct, maps, shift)


def _birth_map(pre, post, m):
    (o,) = m.new_edges
    cs, ct = cube_of(pre), cube_of(post)

    def rule(v, L):
        trans = _transfer(cs, ct, v, v, lambda e: e)
        return [(v, _relabel(L, trans))]

    return _generator_map(pre, post, (0, 1), rule)


def _death_map(pre, post, m):
    (o,) = m.edges
    cs, ct = cube_of(pre), cube_of(post)

    def rule(v, L):
        idx = cs.circle_of[v][o]
        if not (L >> idx) & 1:
            return []
        trans = _transfer(cs, ct, v, v, lambda e: None if e == o else e)
        out = 0
        for k, t in enumerate(trans):
            if k != idx and (L >> k) & 1:
                out |= 1 << t
        return [(v, out)]

    return _generator_map(pre, post, (0, 1), rule)


def _saddle_map(pre, post, m):
    a, b = m.edges
    new = m.new_edges
    c_new = new[0]
    d_new = new[1] if len(new) == 2 else new[0]
    cs, ct = cube_of(pre), cube_of(post)
    gone = {a, b}

    def emap(e):
        return None if e in gone else e

    def rule(v, L):
        src, dst = cs.circle_of[v], ct.circle_of[v]
        ia, ib = src[a], src[b]
        jc, jd = dst[c_new], dst[d_new]
        trans = _transfer(cs, ct, v, v, emap)
        base = 0
        for k, t in enumerate(trans):
            if k in (ia, ib):
                continue
            if t is None:
                raise ComplexMismatch("saddle: lost track of an uninvolved circle")
            if (L >> k) & 1:
                base |= 1 << t
        if ia != ib and jc == jd:
            xa, xb = (L >> ia) & 1, (L >> ib) & 1
            if xa and xb:
                return []
            return [(v, base | ((xa | xb) << jc))]
        if ia == ib and jc != jd:
            if (L >> ia) & 1:
                return [(v, base | (1 << jc) | (1 << jd))]
            return [(v, base | (1 << jc)), (v, base | (1 << jd))]
        raise ComplexMismatch("saddle is neither a merge nor a split")

    return _generator_map(pre, post, (0, -1), rule)


class _Elimination:
    """Strong deformation retraction of C(big) onto a copy of C(small)."""

    def __init__(self, big, small, xmap, rem_bits, emap, fixed, pairs):
        self.big, self.small = big, small
        blocks, terms = _raw_complex(big)
        d, rev = {}, {}
        for bd, gs in blocks.items():
            nxt = blocks.get((bd[0] + 1, bd[1]), [])
            for g, t in zip(gs, terms[bd]):
                d[g] = {nxt[r]: c for r, c in t.items()}
                rev.setdefault(g, set())
        for g, img in d.items():
            for t in img:
                rev[t].add(g)
        g_map = {x: {x: 1} for x in d}
        f_map = {x: {x: 1} for x in d}
        frev = {x: {x} for x in d}
        for x, y in pairs:
            u = d[x].get(y)
            if u not in (1, -1):
                raise ComplexMismatch(f"pivot {x}->{y} is {u}, not a unit")
            dx = dict(d[x])
            for a in list(rev[y]):
                if a == x:
                    continue
                c = d[a][y] * u
                row = d[a]
                for t, w in dx.items():
                    nv = row.get(t, 0) - c * w
                    if nv:
                        if t not in row:
                            rev[t].add(a)
                        row[t] = nv
                    else:
                        row.pop(t, None)
                        rev[t].discard(a)
                ga = g_map[a]
                for o, w in g_map[x].items():
                    nv = ga.get(o, 0) - c * w
                    if nv:
                        ga[o] = nv
                    else:
                        ga.pop(o, None)
            for o in list(frev[y]):
                fo = f_map[o]
                c = fo[y] * u
                for t, w in dx.items():
                    nv = fo.get(t, 0) - c * w
                    if nv:
                        if t not in fo:
                            frev[t].add(o)
                        fo[t] = nv
                    else:
                        fo.pop(t, None)
                        frev[t].discard(o)
            for z in rev.pop(x):
                del d[z][x]
            for o in frev.pop(x):
                del f_map[o][x]
            for gen in (x, y):
                for t in d[gen]:
                    rev[t].discard(gen)
                del d[gen]
                del g_map[gen]
            if rev.pop(y) or frev.pop(y):
                raise ComplexMismatch("elimination left dangling references")
        self.d, self.g_map, self.f_map = d, g_map, f_map
        self._match(xmap, rem_bits, emap, fixed)

    def _match(self, xmap, rem_bits, emap, fixed):
        cs, cb = cube_of(self.small), cube_of(self.big)
        bij = {}
        for v in range(1 << cs.n):
            vb = rem_bits
            for k in range(cs.n):
                if (v >> k) & 1:
                    vb |= 1 << xmap[k]
            trans = _transfer(cs, cb, v, vb, emap)
            if None in trans:
                raise ComplexMismatch("cannot match circles across the move")
            extra = fixed(vb)
            for L in range(1 << cs.n_circles(v)):
                bij[(v, L)] = (vb, _relabel(L, trans) | extra)
        if set(bij.values()) != set(self.d):
            raise ComplexMismatch("surviving generators do not match the smaller diagram")
        inv = {b: s for s, b in bij.items()}
        small_c = build_complex(self.small, "F2")
        for (i, j), gs in small_c.blocks.items():
            nxt = small_c.blocks.get((i + 1, j), [])
            for g, img in zip(gs, small_c.diff[(i, j)]):
                want = {nxt[r] for r in _bits(img)}
                got = {inv[t] for t, c in self.d[bij[g]].items() if c % 2}
                if want != got:
                    raise ComplexMismatch(f"reduced differential differs at {g}")
        self.bij, self.inv = bij, inv

    def up(self):
        """Chain map C(small) -> C(big)."""
        cs, cb = build_complex(self.small, "F2"), build_complex(self.big, "F2")
        maps = {}
        for bd, gs in cs.blocks.items():
            idx = cb.index.get(bd, {})
            out = []
            for g in gs:
                vec = 0
                for o, c in self.g_map[self.bij[g]].items():
                    if c % 2:
                        if o not in idx:
                            raise ComplexMismatch(f"inclusion leaves bidegree {bd}")
                        vec ^= 1 << idx[o]
                out.append(vec)
            maps[bd] = out
        return ChainMap(cs, cb, maps, (0, 0))

    def down(self):
        """Chain map C(big) -> C(small)."""
        cs, cb = build_complex(self.small, "F2"), build_complex(self.big, "F2")
        maps = {}
        for bd, gs in cb.blocks.items():
            idx = cs.index.get(bd, {})
            out = []
            for g in gs:
                vec = 0
                for t, c in self.f_map[g].items():
                    if c % 2:
                        s = self.inv[t]
                        if s not in idx:
                            raise ComplexMismatch(f"projection leaves bidegree {bd}")
                        vec ^= 1 << idx[s]
                out.append(vec)
            maps[bd] = out
        return ChainMap(cb, cs, maps, (0, 0))


def _bits(x):
    k = 0
    while x:
        if x & 1:
            yield k
        x >>= 1
        k += 1


def _r1_elimination(big, small, kappa, kink, xmap, emap):
    cb = cube_of(big)
    bit = 1 << kappa
    if frozenset([kink]) in cb.circles[0]:
        s_o = 0
    elif frozenset([kink]) in cb.circles[bit]:
        s_o = 1
    else:
        raise ComplexMismatch("kink edge never forms its own circle")
    pairs = []
    for v in range(1 << cb.n):
        if v & bit:
            continue
        w = v | bit
        tab = cb.edge_table(v, kappa)
        for L in range(1 << cb.n_circles(v)):
            if s_o == 0:
                if (L >> cb.circle_of[v][kink]) & 1:
                    continue
                (L2,) = tab[L]
            else:
                o = cb.circle_of[w][kink]
                (L2,) = [t for t in tab[L] if (t >> o) & 1]
            pairs.append(((v, L), (w, L2)))
    rem = bit if s_o else 0

    def fixed(vb):
        return 0 if s_o else 1 << cb.circle_of[vb][kink]

    return _Elimination(big, small, xmap, rem, emap, fixed, pairs)


def _r2_elimination(big, small, x1, x2, a2, b2, xmap, emap):
    cb = cube_of(big)
    o_circle = frozenset([a2, b2])
    b1, b2_ = 1 << x1, 1 << x2
    o_state = [s for s in (b1, b2_) if o_circle in cb.circles[s]]
    if len(o_state) != 1:
        raise ComplexMismatch("bigon never forms its own circle in a weight-one state")
    first = o_state[0]
    second = b2_ if first == b1 else b1
    k_first = x1 if first == b1 else x2
    k_second = x2 if first == b1 else x1
    pairs = []
    mask = b1 | b2_
    for v in range(1 << cb.n):
        if v & mask:
            continue
        w = v | first
        o = cb.circle_of[w][a2]
        tab = cb.edge_table(v, k_first)
        for L in range(1 << cb.n_circles(v)):
            (L2,) = [t for t in tab[L] if (t >> o) & 1]
            pairs.append(((v, L), (w, L2)))
        tab2 = cb.edge_table(w, k_second)
        for L in range(1 << cb.n_circles(w)):
            if (L >> o) & 1:
                continue
            (L2,) = tab2[L]
            pairs.append(((w, L), (w | second, L2)))
    return _Elimination(big, small, xmap, second, emap, lambda vb: 0, pairs)


@lru_cache(maxsize=32)
def _reidemeister(pre, post, m):
    """Elimination data for an R1/R2 move; returns ``(elimination, upward)``."""
    k = m.kind
    if k in ("r1_pos", "r1_neg", "r2_intro"):
        big, small, mv = post, pre, m
        upward = True
    else:
        big, small, mv = pre, post, _inverse(pre, post, m)
        upward = False
    n_small = small.n_crossings
    if mv.kind in ("r1_pos", "r1_neg"):
        (e,) = mv.edges
        e1, kink = mv.new_edges[0], mv.new_edges[1]
        if upward:
            xmap = list(range(n_small))
            kappa = n_small
        else:
            kappa, _, _ = _kink_data(big, kink)
            xmap = [c for c in range(big.n_crossings) if c != kappa]
        emap = lambda x: e1 if x == e else x
        el = _r1_elimination(big, small, kappa, kink, xmap, emap)
    else:
        a, b = mv.edges
        a1, a2, a3, b1, b2, b3 = mv.new_edges
        if upward:
            xmap = list(range(n_small))
            x1, x2 = n_small, n_small + 1
        else:
            xs, _, _ = _bigon_data(big, a2, b2)
            x1, x2 = xs
            xmap = [c for c in range(big.n_crossings) if c not in xs]
        ren = {a: a1, b: b1}
        emap = lambda x: ren.get(x, x)
        el = _r2_elimination(big, small, x1, x2, a2, b2, xmap, emap)
    return el, upward


def chain_map_of_move(m, pre, post=None):
    """F2 chain map ``C(pre) -> C(post)`` induced by the move ``m``."""
    if post is None:
        post = apply_move(pre, m)
    k = m.kind
    if k == "birth":
        f = _birth_map(pre, post, m)
    elif k == "death":
        f = _death_map(pre, post, m)
    elif k == "saddle":
        f = _saddle_map(pre, post, m)
    elif k in ("r1_pos", "r1_neg", "r1_elim", "r2_intro", "r2_elim"):
        el, upward = _reidemeister(pre, post, m)
        f = el.up() if upward else el.down()
    else:
        raise ComplexMismatch(f"no chain map for {k}")
    f.name = k
    return f


def movie_chain_map(mv):
    """Composite chain map of a movie; the empty movie gives the identity."""
    f = identity_map(build_complex(mv.start, "F2"))
    for k, m in enumerate(mv.moves):
        step = chain_map_of_move(m, mv.frames[k], mv.frames[k + 1])
        f = f.compose(step)
    f.name = f"movie[{len(mv.moves)}]"
    return f


def restrict_reduced(f, basepoint):
    """Restriction of a module chain map to the reduced subcomplexes."""
    rs = reduced_complex(f.source, basepoint)
    rt = reduced_complex(f.target, basepoint)
    di, dj = f.shift
    maps = {}
    for (i, j), gs in rs.blocks.items():
        sb = (i, j - 1)
        tb = (i + di, j - 1 + dj)
        src_idx = f.source.index[sb]
        tgt_gens = f.target.blocks.get(tb, [])
        tidx = rt.index.get((tb[0], tb[1] + 1), {})
        out = []
        for g in gs:
            img = f.maps[sb][src_idx[g]]
            vec = 0
            for b in _bits(img):
                h = tgt_gens[b]
                if h not in tidx:
                    raise ComplexMismatch("map does not preserve the reduced subcomplex")
                vec ^= 1 << tidx[h]
            out.append(vec)
        maps[(i, j)] = out
    return ChainMap(rs, rt, maps, f.shift, f.name + "~")


def induced_homology_map(f, hs=None, ht=None):
    """Per-bidegree F2 matrices of ``f`` on homology bases."""
    return induced_matrices(f, hs, ht)

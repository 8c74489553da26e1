"""Exact linear algebra over F2 (int bitsets) and over the integers."""

from __future__ import annotations

from dataclasses import dataclass


def iter_bits(x):
    """Indices of the set bits of a non-negative int, ascending."""
    while x:
        low = x & -x
        yield low.bit_length() - 1
        x ^= low


class MatrixF2:
    """Dense F2 matrix; row ``r`` is an int whose bit ``c`` is entry (r, c)."""

    __slots__ = ("nrows", "ncols", "rows")

    def __init__(self, nrows, ncols, rows=None):
        self.nrows = nrows
        self.ncols = ncols
        self.rows = list(rows) if rows is not None else [0] * nrows
        if len(self.rows) != nrows:
            raise ValueError("row count mismatch")
        mask = (1 << ncols) - 1
        if any(r & ~mask for r in self.rows):
            raise ValueError("row longer than ncols")

    @classmethod
    def from_dense(cls, data, ncols=None):
        data = [list(r) for r in data]
        ncols = len(data[0]) if data and ncols is None else (ncols or 0)
        rows = []
        for r in data:
            if len(r) != ncols:
                raise ValueError("ragged matrix")
            rows.append(sum(1 << c for c, v in enumerate(r) if v % 2))
        return cls(len(data), ncols, rows)

    @classmethod
    def from_columns(cls, nrows, columns):
        """Build from column bitsets (bit ``r`` of column ``c`` is entry (r, c))."""
        rows = [0] * nrows
        for c, col in enumerate(columns):
            for r in iter_bits(col):
                rows[r] |= 1 << c
        return cls(nrows, len(columns), rows)

    @classmethod
    def identity(cls, n):
        return cls(n, n, [1 << i for i in range(n)])

    @classmethod
    def zeros(cls, nrows, ncols):
        return cls(nrows, ncols)

    def to_dense(self):
        return [[(r >> c) & 1 for c in range(self.ncols)] for r in self.rows]

    def columns(self):
        cols = [0] * self.ncols
        for r, row in enumerate(self.rows):
            for c in iter_bits(row):
                cols[c] |= 1 << r
        return cols

    def transpose(self):
        return MatrixF2(self.ncols, self.nrows, self.columns())

    def __matmul__(self, other):
        if self.ncols != other.nrows:
            raise ValueError(f"shape mismatch {self.shape} @ {other.shape}")
        out = []
        for row in self.rows:
            acc = 0
            for c in iter_bits(row):
                acc ^= other.rows[c]
            out.append(acc)
        return MatrixF2(self.nrows, other.ncols, out)

    def __add__(self, other):
        if self.shape != other.shape:
            raise ValueError("shape mismatch")
        return MatrixF2(self.nrows, self.ncols, [a ^ b for a, b in zip(self.rows, other.rows)])

    def apply(self, vec):
        """Multiply by a column vector given as a bitset."""
        out = 0
        for r, row in enumerate(self.rows):
            if (row & vec).bit_count() & 1:
                out |= 1 << r
        return out

    @property
    def shape(self):
        return (self.nrows, self.ncols)

    def is_zero(self):
        return not any(self.rows)

    def rank(self):
        return rref_f2(self).rank

    def __eq__(self, other):
        return (
            isinstance(other, MatrixF2)
            and self.shape == other.shape
            and self.rows == other.rows
        )

    def __repr__(self):
        return f"MatrixF2({self.nrows}x{self.ncols}, {self.to_dense()})"


@dataclass
class RrefF2:
    rank: int
    pivots: list
    kernel_basis: MatrixF2  # columns are kernel vectors
    image_basis: MatrixF2  # columns are the pivot columns of the input
    reduced: MatrixF2


def rref_f2(m):
    """Row-reduce ``m`` over F2, pivoting column by column, topmost row first."""
    rows = list(m.rows)
    pivots = []
    r = 0
    for c in range(m.ncols):
        bit = 1 << c
        piv = next((k for k in range(r, m.nrows) if rows[k] & bit), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        for k in range(m.nrows):
            if k != r and rows[k] & bit:
                rows[k] ^= rows[r]
        pivots.append(c)
        r += 1
        if r == m.nrows:
            break
    pivot_set = set(pivots)
    kernel = []
    for f in range(m.ncols):
        if f in pivot_set:
            continue
        v = 1 << f
        for k, c in enumerate(pivots):
            if (rows[k] >> f) & 1:
                v |= 1 << c
        kernel.append(v)
    cols = m.columns()
    return RrefF2(
        rank=len(pivots),
        pivots=pivots,
        kernel_basis=MatrixF2.from_columns(m.ncols, kernel),
        image_basis=MatrixF2.from_columns(m.nrows, [cols[c] for c in pivots]),
        reduced=MatrixF2(m.nrows, m.ncols, rows),
    )


class Echelon:
    """Incremental F2 echelon basis keyed by leading (highest) bit.

    Each stored row carries a tag bitset recording which inserted vectors it
    is a combination of, so reduction also yields coordinates.
    """

    __slots__ = ("rows",)

    def __init__(self):
        self.rows = {}

    def reduce(self, vec, tag=0):
        rows = self.rows
        while vec:
            top = vec.bit_length() - 1
            hit = rows.get(top)
            if hit is None:
                break
            vec ^= hit[0]
            tag ^= hit[1]
        return vec, tag

    def fully_reduce(self, vec, tag=0):
        """Reduce every bit that has a pivot, not just the leading ones."""
        rows = self.rows
        rest = 0
        while vec:
            top = vec.bit_length() - 1
            hit = rows.get(top)
            if hit is None:
                rest |= 1 << top
                vec ^= 1 << top
            else:
                vec ^= hit[0]
                tag ^= hit[1]
        return rest, tag

    def add(self, vec, tag=0):
        """Insert; returns False when ``vec`` was already in the span."""
        vec, tag = self.reduce(vec, tag)
        if not vec:
            return False
        self.rows[vec.bit_length() - 1] = (vec, tag)
        return True

    def __len__(self):
        return len(self.rows)


def kernel_and_image(images, source_indices):
    """Kernel vectors and image echelon for a map given on basis vectors.

    ``images[k]`` is the image (bitset) of the basis vector whose own index
    is ``source_indices[k]``.  Kernel vectors are returned as bitsets over
    the source indices.
    """
    ech = Echelon()
    kernel = []
    for s, img in zip(source_indices, images):
        vec, tag = ech.reduce(img, 1 << s)
        if vec:
            ech.rows[vec.bit_length() - 1] = (vec, tag)
        else:
            kernel.append(tag)
    return kernel, ech


# ---------------------------------------------------------------------------
# integers


class MatrixZ:
    """Sparse integer matrix: ``entries[r]`` maps column -> nonzero value."""

    __slots__ = ("nrows", "ncols", "entries")

    def __init__(self, nrows, ncols, entries=None):
        self.nrows = nrows
        self.ncols = ncols
        self.entries = {}
        for r, row in (entries or {}).items():
            clean = {c: v for c, v in row.items() if v}
            if clean:
                self.entries[r] = clean

    @classmethod
    def from_dense(cls, data):
        data = [list(r) for r in data]
        ncols = len(data[0]) if data else 0
        return cls(
            len(data),
            ncols,
            {r: {c: v for c, v in enumerate(row) if v} for r, row in enumerate(data)},
        )

    @classmethod
    def identity(cls, n):
        return cls(n, n, {i: {i: 1} for i in range(n)})

    def to_dense(self):
        out = [[0] * self.ncols for _ in range(self.nrows)]
        for r, row in self.entries.items():
            for c, v in row.items():
                out[r][c] = v
        return out

    def __matmul__(self, other):
        if self.ncols != other.nrows:
            raise ValueError("shape mismatch")
        out = {}
        for r, row in self.entries.items():
            acc = {}
            for k, v in row.items():
                for c, w in other.entries.get(k, {}).items():
                    acc[c] = acc.get(c, 0) + v * w
            out[r] = acc
        return MatrixZ(self.nrows, other.ncols, out)

    def __eq__(self, other):
        return (
            isinstance(other, MatrixZ)
            and (self.nrows, self.ncols) == (other.nrows, other.ncols)
            and self.entries == other.entries
        )

    @property
    def shape(self):
        return (self.nrows, self.ncols)

    def __repr__(self):
        return f"MatrixZ({self.nrows}x{self.ncols}, {self.to_dense()})"


def mod2(m):
    """Entrywise reduction of an integer matrix modulo 2."""
    rows = [0] * m.nrows
    for r, row in m.entries.items():
        rows[r] = sum(1 << c for c, v in row.items() if v % 2)
    return MatrixF2(m.nrows, m.ncols, rows)


def _snf_dense(a, track=True):
    """In-place Smith normal form of a dense list-of-lists integer matrix.

    Returns ``(factors, left, right)`` with ``left @ a_orig @ right`` diagonal.
    Pivots are chosen with minimal absolute value.
    """
    nr = len(a)
    nc = len(a[0]) if nr else 0
    left = [[int(i == j) for j in range(nr)] for i in range(nr)] if track else None
    right = [[int(i == j) for j in range(nc)] for i in range(nc)] if track else None

    def swap_rows(i, j):
        a[i], a[j] = a[j], a[i]
        if track:
            left[i], left[j] = left[j], left[i]

    def swap_cols(i, j):
        for row in a:
            row[i], row[j] = row[j], row[i]
        if track:
            for row in right:
                row[i], row[j] = row[j], row[i]

    def add_row(dst, src, q):  # row_dst -= q * row_src
        ra, rs = a[dst], a[src]
        for k in range(nc):
            if rs[k]:
                ra[k] -= q * rs[k]
        if track:
            la, ls = left[dst], left[src]
            for k in range(nr):
                if ls[k]:
                    la[k] -= q * ls[k]

    def add_col(dst, src, q):  # col_dst -= q * col_src
        for row in a:
            if row[src]:
                row[dst] -= q * row[src]
        if track:
            for row in right:
                if row[src]:
                    row[dst] -= q * row[src]

    factors = []
    t = 0
    while t < min(nr, nc):
        best = None
        for i in range(t, nr):
            row = a[i]
            for j in range(t, nc):
                v = row[j]
                if v and (best is None or abs(v) < best[0]):
                    best = (abs(v), i, j)
                    if best[0] == 1:
                        break
            if best and best[0] == 1:
                break
        if best is None:
            break
        _, i, j = best
        swap_rows(t, i)
        swap_cols(t, j)
        while True:
            p = a[t][t]
            dirty = False
            for i in range(t + 1, nr):
                if a[i][t]:
                    add_row(i, t, a[i][t] // p)
                    if a[i][t]:
                        dirty = True
            for j in range(t + 1, nc):
                if a[t][j]:
                    add_col(j, t, a[t][j] // p)
                    if a[t][j]:
                        dirty = True
            if dirty:
                best = None
                for i in range(t + 1, nr):
                    if a[i][t] and (best is None or abs(a[i][t]) < best[0]):
                        best = (abs(a[i][t]), i, "r")
                for j in range(t + 1, nc):
                    if a[t][j] and (best is None or abs(a[t][j]) < best[0]):
                        best = (abs(a[t][j]), j, "c")
                if best[2] == "r":
                    swap_rows(t, best[1])
                else:
                    swap_cols(t, best[1])
                continue
            bad = None
            for i in range(t + 1, nr):
                for j in range(t + 1, nc):
                    if a[i][j] % p:
                        bad = i
                        break
                if bad is not None:
                    break
            if bad is None:
                break
            add_row(t, bad, -1)
        if a[t][t] < 0:
            a[t] = [-v for v in a[t]]
            if track:
                left[t] = [-v for v in left[t]]
        factors.append(a[t][t])
        t += 1
    return factors, left, right


def smith_normal_form(m):
    """Invariant factors and unimodular transforms with ``left @ m @ right`` diagonal."""
    a = m.to_dense()
    factors, left, right = _snf_dense(a)
    return factors, MatrixZ.from_dense(left) if left else MatrixZ(0, 0), (
        MatrixZ.from_dense(right) if right else MatrixZ(0, 0)
    )


def invariant_factors(m):
    """Nonzero invariant factors of a sparse integer matrix (no transforms).

    Unit pivots are eliminated sparsely first; whatever remains is handed to
    the dense Smith form.
    """
    rows = {r: dict(row) for r, row in m.entries.items()}
    cols = {}
    for r, row in rows.items():
        for c in row:
            cols.setdefault(c, set()).add(r)
    units = 0
    progress = True
    while progress:
        progress = False
        for r in sorted(rows):
            row = rows.get(r)
            if not row:
                continue
            cands = [c for c, v in row.items() if v in (1, -1)]
            if not cands:
                continue
            c = min(cands, key=lambda k: (len(cols[k]), k))
            pv = row[c]
            for r2 in list(cols[c]):
                if r2 == r:
                    continue
                row2 = rows[r2]
                q = row2[c] * pv
                for k, v in row.items():
                    nv = row2.get(k, 0) - q * v
                    if nv:
                        if k not in row2:
                            cols[k].add(r2)
                        row2[k] = nv
                    else:
                        row2.pop(k, None)
                        cols[k].discard(r2)
                if not row2:
                    del rows[r2]
            for k in row:
                cols[k].discard(r)
            del rows[r]
            units += 1
            progress = True
    rest = [r for r in rows if rows[r]]
    if not rest:
        return [1] * units
    used = sorted({c for r in rest for c in rows[r]})
    pos = {c: k for k, c in enumerate(used)}
    dense = [[0] * len(used) for _ in rest]
    for i, r in enumerate(rest):
        for c, v in rows[r].items():
            dense[i][pos[c]] = v
    factors, _, _ = _snf_dense(dense, track=False)
    return [1] * units + factors

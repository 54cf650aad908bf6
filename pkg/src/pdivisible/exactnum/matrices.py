"""Dense and sparse exact rational linear algebra.

Dense matrices are lists of row lists of ``mpq``.  Sparse vectors are dicts
``{index: mpq}`` without zero entries; a :class:`LinearMap` stores the columns
of a square matrix (and of its inverse) as sparse vectors.
"""

from __future__ import annotations

from collections.abc import Sequence

from gmpy2 import mpq

from .scalars import INF, ONE, ZERO, Q, val_p

Matrix = list  # list[list[mpq]]
SparseVec = dict  # dict[int, mpq]


# ---------------------------------------------------------------- dense ----

def to_matrix(rows) -> Matrix:
    m = [[Q(x) for x in row] for row in rows]
    if m and any(len(row) != len(m[0]) for row in m):
        raise ValueError("ragged matrix")
    return m


def shape(a: Matrix) -> tuple[int, int]:
    return (len(a), len(a[0]) if a else 0)


def identity(n: int) -> Matrix:
    return [[ONE if i == j else ZERO for j in range(n)] for i in range(n)]


def zeros(n: int, m: int | None = None) -> Matrix:
    return [[ZERO] * (n if m is None else m) for _ in range(n)]


def transpose(a: Matrix) -> Matrix:
    return [list(col) for col in zip(*a)] if a else []


def scale(c, a: Matrix) -> Matrix:
    c = Q(c)
    return [[c * x for x in row] for row in a]


def matmul(a: Matrix, b: Matrix) -> Matrix:
    bt = transpose(b)
    out = []
    for row in a:
        nz = [(k, x) for k, x in enumerate(row) if x]
        out.append([sum((x * col[k] for k, x in nz), ZERO) for col in bt])
    return out


def matvec(a: Matrix, v: Sequence) -> list:
    return [sum((x * y for x, y in zip(row, v) if x), ZERO) for row in a]


def matpow(a: Matrix, q: int) -> Matrix:
    if q < 0:
        return matpow(inverse(a), -q)
    result = identity(len(a))
    base = a
    while q:
        if q & 1:
            result = matmul(result, base)
        q >>= 1
        if q:
            base = matmul(base, base)
    return result


def kron(a: Matrix, b: Matrix) -> Matrix:
    return [[x * y for x in ra for y in rb] for ra in a for rb in b]


def block_diag(*blocks: Matrix) -> Matrix:
    n = sum(len(b) for b in blocks)
    out = zeros(n)
    off = 0
    for b in blocks:
        for i, row in enumerate(b):
            out[off + i][off:off + len(row)] = row
        off += len(b)
    return out


def min_valuation(a: Matrix, p: int):
    return min((val_p(x, p) for row in a for x in row if x), default=INF)


def is_integral(a: Matrix, p: int) -> bool:
    return min_valuation(a, p) >= 0


def inverse(a: Matrix) -> Matrix:
    """Gauss-Jordan inverse; raises ``ValueError`` for singular input."""
    n = len(a)
    if any(len(row) != n for row in a):
        raise ValueError("inverse of a non-square matrix")
    work = [list(row) + [ONE if i == j else ZERO for j in range(n)]
            for i, row in enumerate(a)]
    for col in range(n):
        piv = next((i for i in range(col, n) if work[i][col]), None)
        if piv is None:
            raise ValueError("matrix is singular")
        work[col], work[piv] = work[piv], work[col]
        inv = ONE / work[col][col]
        work[col] = [x * inv for x in work[col]]
        prow = work[col]
        for i in range(n):
            f = work[i][col]
            if i != col and f:
                work[i] = [x - f * y for x, y in zip(work[i], prow)]
    return [row[n:] for row in work]


def det(a: Matrix) -> mpq:
    n = len(a)
    work = [list(row) for row in a]
    result = ONE
    for col in range(n):
        piv = next((i for i in range(col, n) if work[i][col]), None)
        if piv is None:
            return ZERO
        if piv != col:
            work[col], work[piv] = work[piv], work[col]
            result = -result
        pv = work[col][col]
        result *= pv
        for i in range(col + 1, n):
            f = work[i][col] / pv
            if f:
                work[i] = [x - f * y for x, y in zip(work[i], work[col])]
    return result


def charpoly(a: Matrix) -> list:
    """Coefficients ``[c_0, ..., c_n]`` of det(xI - A), lowest degree first.

    Faddeev-LeVerrier recursion; exact over the rationals.
    """
    n = len(a)
    coeffs = [ZERO] * (n + 1)
    coeffs[n] = ONE
    m = zeros(n)
    for k in range(1, n + 1):
        m = matmul(a, m)
        c_prev = coeffs[n - k + 1]
        for i in range(n):
            m[i][i] += c_prev
        am = matmul(a, m)
        coeffs[n - k] = -sum((am[i][i] for i in range(n)), ZERO) / k
    return coeffs


def newton_slopes(coeffs: Sequence, p: int) -> list:
    """Valuations of the roots of a polynomial, with multiplicity, sorted.

    ``coeffs`` is lowest degree first with nonzero constant term.
    """
    pts = [(i, val_p(c, p)) for i, c in enumerate(coeffs) if c]
    if not pts or pts[0][0] != 0:
        raise ValueError("polynomial has a zero root")
    hull: list = []
    for pt in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            # drop the middle point when it lies on or above the chord
            if (y2 - y1) * (pt[0] - x1) >= (pt[1] - y1) * (x2 - x1):
                hull.pop()
            else:
                break
        hull.append(pt)
    slopes = []
    for (x1, y1), (x2, y2) in zip(hull, hull[1:]):
        root_val = mpq(y1 - y2, x2 - x1)
        slopes.extend([root_val] * (x2 - x1))
    return sorted(slopes)


# ------------------------------------------------ sparse rational echelon ----

def sparse(v: Sequence) -> SparseVec:
    return {i: Q(x) for i, x in enumerate(v) if x}


def dense(v: SparseVec, n: int) -> list:
    out = [ZERO] * n
    for i, x in v.items():
        out[i] = x
    return out


def axpy(y: SparseVec, a, x: SparseVec) -> SparseVec:
    """Return ``y + a*x`` as a new sparse vector."""
    out = dict(y)
    for i, xi in x.items():
        s = out.get(i, ZERO) + a * xi
        if s:
            out[i] = s
        else:
            out.pop(i, None)
    return out


class RationalEchelon:
    """Reduced row echelon basis of a subspace of Q^n."""

    def __init__(self, n: int, vectors=()):
        self.n = n
        self.rows: dict[int, SparseVec] = {}  # pivot column -> row with 1 there
        for v in vectors:
            self.add(v if isinstance(v, dict) else sparse(v))

    @property
    def dim(self) -> int:
        return len(self.rows)

    def reduce(self, v: SparseVec) -> SparseVec:
        v = dict(v)
        for c in sorted(set(v) & set(self.rows)):
            x = v.get(c)
            if x:
                v = axpy(v, -x, self.rows[c])
        # pivots introduced by earlier subtractions are impossible: rows are
        # fully reduced, so one ascending pass clears every pivot column
        return v

    def add(self, v: SparseVec) -> bool:
        v = self.reduce(v)
        if not v:
            return False
        c = min(v)
        inv = ONE / v[c]
        v = {i: x * inv for i, x in v.items()}
        for pc, row in self.rows.items():
            x = row.get(c)
            if x:
                self.rows[pc] = axpy(row, -x, v)
        self.rows[c] = v
        return True

    def contains(self, v: SparseVec) -> bool:
        return not self.reduce(v)

    def basis(self) -> list:
        return [self.rows[c] for c in sorted(self.rows)]

    def pivots(self) -> list:
        return sorted(self.rows)

    def key(self) -> tuple:
        return tuple((c, tuple(sorted(self.rows[c].items()))) for c in self.pivots())


def left_kernel(rows: list, n: int) -> list:
    """Basis of {y : sum_i y_i rows[i] = 0} as sparse vectors in Q^len(rows)."""
    # each row carries a unit tag in column n+i so the echelon tracks combinations
    ech: dict[int, SparseVec] = {}
    kernel = []
    for i, r in enumerate(rows):
        v = dict(r)
        v[n + i] = ONE
        while True:
            cols = [c for c in v if c < n and c in ech]
            if not cols:
                break
            c = min(cols)
            v = axpy(v, -v[c], ech[c])
        head = min((c for c in v if c < n), default=None)
        if head is None:
            kernel.append({c - n: x for c, x in v.items()})
        else:
            inv = ONE / v[head]
            ech[head] = {c: x * inv for c, x in v.items()}
    return kernel


def intersect_subspaces(a: RationalEchelon, b: RationalEchelon) -> RationalEchelon:
    """Intersection of two subspaces of the same Q^n."""
    if a.n != b.n:
        raise ValueError("ambient mismatch")
    ba, bb = a.basis(), b.basis()
    stacked = ba + [{i: -x for i, x in v.items()} for v in bb]
    out = RationalEchelon(a.n)
    for y in left_kernel(stacked, a.n):
        w: SparseVec = {}
        for i, c in y.items():
            if i < len(ba):
                w = axpy(w, c, ba[i])
        out.add(w)
    return out


# ------------------------------------------------------------ linear maps ----

class LinearMap:
    """Invertible linear map of Q^n stored by sparse columns.

    ``cols[j]`` is the image of the j-th unit vector.  The inverse is either
    supplied (when it is known in closed form) or computed on demand.
    """

    def __init__(self, cols: list, inverse_cols: list | None = None):
        self.n = len(cols)
        self.cols = cols
        self._inverse_cols = inverse_cols

    @classmethod
    def from_dense(cls, a: Matrix, a_inv: Matrix | None = None) -> "LinearMap":
        n = len(a)
        cols = [{i: a[i][j] for i in range(n) if a[i][j]} for j in range(n)]
        inv = None
        if a_inv is not None:
            inv = [{i: a_inv[i][j] for i in range(n) if a_inv[i][j]} for j in range(n)]
        return cls(cols, inv)

    def to_dense(self) -> Matrix:
        out = zeros(self.n)
        for j, col in enumerate(self.cols):
            for i, x in col.items():
                out[i][j] = x
        return out

    def __call__(self, v: SparseVec) -> SparseVec:
        out: SparseVec = {}
        for j, x in v.items():
            for i, y in self.cols[j].items():
                s = out.get(i, ZERO) + x * y
                if s:
                    out[i] = s
                else:
                    del out[i]
        return out

    def inverse(self) -> "LinearMap":
        if self._inverse_cols is None:
            inv = inverse(self.to_dense())
            self._inverse_cols = LinearMap.from_dense(inv).cols
        return LinearMap(self._inverse_cols, self.cols)

    def compose(self, other: "LinearMap") -> "LinearMap":
        """``self`` after ``other``."""
        cols = [self(c) for c in other.cols]
        inv = None
        if self._inverse_cols is not None and other._inverse_cols is not None:
            inv = [other.inverse()(c) for c in self._inverse_cols]
        return LinearMap(cols, inv)

    def scaled(self, c) -> "LinearMap":
        c = Q(c)
        cols = [{i: c * x for i, x in col.items()} for col in self.cols]
        inv = None
        if self._inverse_cols is not None:
            ci = ONE / c
            inv = [{i: ci * x for i, x in col.items()} for col in self._inverse_cols]
        return LinearMap(cols, inv)


def kron_map(a: Matrix, b: Matrix) -> list:
    """Sparse columns of the Kronecker product ``a (x) b``."""
    na, nb = len(a), len(b)
    cols = []
    for ja in range(na):
        col_a = [(i, a[i][ja]) for i in range(na) if a[i][ja]]
        for jb in range(nb):
            col_b = [(i, b[i][jb]) for i in range(nb) if b[i][jb]]
            cols.append({ia * nb + ib: x * y for ia, x in col_a for ib, y in col_b})
    return cols

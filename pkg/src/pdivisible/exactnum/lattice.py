"""Lattices over the p-local integers inside Q^n, in canonical echelon form.

A lattice is stored by an echelon basis: row ``k`` has its first nonzero
entry (the pivot) at column ``c_k`` equal to ``p**e_k``, pivot columns
increase with ``k``, and every entry of row ``i`` sitting in the pivot column
of a later row ``k`` is reduced into ``Z[1/p] ∩ [0, p**e_k)``.  This form is
unique per lattice, so equality is plain data comparison.
"""

from __future__ import annotations

from dataclasses import dataclass

from .matrices import LinearMap, RationalEchelon, SparseVec, axpy, det, intersect_subspaces, sparse
from .scalars import INF, ONE, ZERO, Q, check_prime, format_rational, ppow, reduce_mod_power, unit_part, val_p


@dataclass(frozen=True)
class EchelonLattice:
    p: int
    n: int
    rows: tuple  # tuple of rows, each a tuple of (column, mpq) sorted by column

    @property
    def rank(self) -> int:
        return len(self.rows)

    @property
    def pivots(self) -> list:
        return [row[0][0] for row in self.rows]

    @property
    def exponents(self) -> list:
        return [val_p(row[0][1], self.p) for row in self.rows]

    def sparse_rows(self) -> list:
        return [dict(row) for row in self.rows]

    def basis(self) -> list:
        """Dense basis vectors."""
        out = []
        for row in self.rows:
            v = [ZERO] * self.n
            for c, x in row:
                v[c] = x
            out.append(v)
        return out

    @property
    def full_rank(self) -> bool:
        return self.rank == self.n

    def to_json(self) -> dict:
        return {
            "p": self.p,
            "ambient": self.n,
            "basis": [[format_rational(x) for x in v] for v in self.basis()],
        }

    def __repr__(self) -> str:
        return f"EchelonLattice(p={self.p}, n={self.n}, basis={self.to_json()['basis']})"


# ------------------------------------------------------------------ core ----

def _normalize(v: SparseVec, c: int, p: int) -> SparseVec:
    u = unit_part(v[c], p)
    if u == 1:
        return v
    inv = ONE / u
    return {i: x * inv for i, x in v.items()}


def _echelon(p: int, n: int, vectors) -> EchelonLattice:
    pivots: dict[int, SparseVec] = {}
    for v in vectors:
        v = {i: x for i, x in v.items() if x}
        while v:
            c = min(v)
            prow = pivots.get(c)
            if prow is None:
                pivots[c] = _normalize(v, c, p)
                break
            x, y = v[c], prow[c]
            if val_p(x, p) >= val_p(y, p):
                v = axpy(v, -(x / y), prow)
            else:
                new = _normalize(v, c, p)
                pivots[c] = new
                v = axpy(prow, -(y / new[c]), new)
    order = sorted(pivots)
    rows = [pivots[c] for c in order]
    # reduce entries above each pivot into the fundamental domain
    for k, ck in enumerate(order):
        rk = rows[k]
        ek = val_p(rk[ck], p)
        for i in range(k):
            x = rows[i].get(ck)
            if x is None:
                continue
            y = reduce_mod_power(x, p, ek)
            if x != y:
                rows[i] = axpy(rows[i], -((x - y) / rk[ck]), rk)
    return EchelonLattice(p, n, tuple(tuple(sorted(r.items())) for r in rows))


def hnf_basis(p: int, vectors, n: int | None = None) -> EchelonLattice:
    """Canonical echelon basis of the p-local span of ``vectors``.

    Vectors may be dense sequences or sparse dicts; ``n`` is required when
    the list is empty or sparse.
    """
    check_prime(p)
    vecs = list(vectors)
    if n is None:
        dense_lens = {len(v) for v in vecs if not isinstance(v, dict)}
        if len(dense_lens) != 1 or any(isinstance(v, dict) for v in vecs):
            if not vecs:
                raise ValueError("ambient dimension is unknown for an empty generating set")
            if len(dense_lens) > 1:
                raise ValueError("vectors do not share an ambient dimension")
            raise ValueError("ambient dimension required for sparse vectors")
        n = dense_lens.pop()
    elif any(not isinstance(v, dict) and len(v) != n for v in vecs):
        raise ValueError("vectors do not share an ambient dimension")
    if n < 1:
        raise ValueError("empty ambient dimension")
    svecs = [v if isinstance(v, dict) else sparse(v) for v in vecs]
    return _echelon(p, n, svecs)


def standard(p: int, n: int) -> EchelonLattice:
    return _echelon(check_prime(p), n, [{i: ONE} for i in range(n)])


def scaled(lat: EchelonLattice, k: int) -> EchelonLattice:
    """``p**k * lat``; stays canonical without re-echelonizing."""
    f = ppow(lat.p, k)
    return EchelonLattice(lat.p, lat.n, tuple(tuple((c, f * x) for c, x in row) for row in lat.rows))


def _check_compatible(a: EchelonLattice, b: EchelonLattice) -> None:
    if a.p != b.p:
        raise ValueError(f"prime mismatch: {a.p} vs {b.p}")
    if a.n != b.n:
        raise ValueError(f"ambient mismatch: {a.n} vs {b.n}")


def join(a: EchelonLattice, b: EchelonLattice) -> EchelonLattice:
    _check_compatible(a, b)
    return _echelon(a.p, a.n, a.sparse_rows() + b.sparse_rows())


def join_all(p: int, n: int, lattices) -> EchelonLattice:
    rows = []
    for lat in lattices:
        if lat.p != p or lat.n != n:
            raise ValueError("prime or ambient mismatch")
        rows.extend(lat.sparse_rows())
    return _echelon(p, n, rows)


# ------------------------------------------------------------ coordinates ----

def coordinates(lat: EchelonLattice, v: SparseVec) -> list | None:
    """Coefficients of ``v`` in the stored basis, or ``None`` if outside the span."""
    v = dict(v)
    coeffs = []
    for row in lat.rows:
        c, piv = row[0]
        x = v.get(c)
        if x:
            t = x / piv
            coeffs.append(t)
            v = axpy(v, -t, dict(row))
        else:
            coeffs.append(ZERO)
    return None if v else coeffs


def contains(lat: EchelonLattice, v) -> bool:
    v = v if isinstance(v, dict) else sparse(v)
    co = coordinates(lat, v)
    return co is not None and all(val_p(x, lat.p) >= 0 for x in co if x)


def is_sublattice(small: EchelonLattice, big: EchelonLattice) -> bool:
    _check_compatible(small, big)
    return all(contains(big, r) for r in small.sparse_rows())


def min_power(a: EchelonLattice, b: EchelonLattice) -> int:
    """Smallest ``l >= 0`` with ``p**l * a`` inside ``b``."""
    _check_compatible(a, b)
    worst = INF
    for row in a.sparse_rows():
        co = coordinates(b, row)
        if co is None:
            raise ValueError("no power of p moves the first lattice into the second")
        for x in co:
            if x:
                worst = min(worst, val_p(x, a.p))
    return 0 if worst == INF else max(0, -worst)


# ---------------------------------------------------------------- duality ----

def _upper_inverse_columns(lat: EchelonLattice) -> list:
    """Columns of B^{-1} for a full-rank echelon basis B (upper triangular)."""
    n = lat.n
    rows = lat.sparse_rows()
    cols = []
    for j in range(n):
        x: SparseVec = {j: ONE / rows[j][j]}
        for i in range(j - 1, -1, -1):
            s = ZERO
            for k, b in rows[i].items():
                if k > i:
                    xk = x.get(k)
                    if xk:
                        s += b * xk
            if s:
                x[i] = -s / rows[i][i]
        cols.append(x)
    return cols


def dual(lat: EchelonLattice) -> EchelonLattice:
    """Dual lattice under the standard pairing; input must be full rank."""
    if not lat.full_rank:
        raise ValueError("dual of a lattice that is not full rank")
    return _echelon(lat.p, lat.n, _upper_inverse_columns(lat))


def _meet_full(a: EchelonLattice, b: EchelonLattice) -> EchelonLattice:
    if a == b:
        return a
    return dual(join(dual(a), dual(b)))


def span_of(lat: EchelonLattice) -> RationalEchelon:
    return RationalEchelon(lat.n, lat.sparse_rows())


def saturation(p: int, space: RationalEchelon) -> EchelonLattice:
    """The lattice ``space ∩ Z_(p)^n``."""
    basis = space.basis()
    k = len(basis)
    if k == 0:
        return EchelonLattice(p, space.n, ())
    # y -> sum y_i basis_i is integral iff y pairs integrally with each column
    cols = [{i: v[j] for i, v in enumerate(basis) if j in v} for j in range(space.n)]
    lam = dual(_echelon(p, k, cols))
    return _echelon(p, space.n, [_combine(basis, r) for r in lam.sparse_rows()])


def _combine(basis: list, coeffs) -> SparseVec:
    out: SparseVec = {}
    items = coeffs.items() if isinstance(coeffs, dict) else enumerate(coeffs)
    for i, c in items:
        if c:
            out = axpy(out, c, basis[i])
    return out


def restrict(lat: EchelonLattice, space: RationalEchelon) -> EchelonLattice:
    """``lat ∩ space``."""
    if space.n != lat.n:
        raise ValueError("ambient mismatch")
    rows = lat.sparse_rows()
    m = len(rows)
    if m == 0:
        return lat
    if lat.full_rank and lat == standard(lat.p, lat.n):
        return saturation(lat.p, space)
    inner = RationalEchelon(lat.n, rows)
    sub = RationalEchelon(m)
    common = intersect_subspaces(inner, space)
    for w in common.basis():
        co = coordinates(lat, w)
        sub.add({i: x for i, x in enumerate(co) if x})
    sat = saturation(lat.p, sub)
    return _echelon(lat.p, lat.n, [_combine(rows, r) for r in sat.sparse_rows()])


def meet(a: EchelonLattice, b: EchelonLattice) -> EchelonLattice:
    """Canonical form of the intersection ``a ∩ b``."""
    _check_compatible(a, b)
    if a.full_rank and b.full_rank:
        return _meet_full(a, b)
    common = intersect_subspaces(span_of(a), span_of(b))
    if common.dim == 0:
        return EchelonLattice(a.p, a.n, ())
    chart = Chart(common)
    ca = chart.project(restrict(a, common))
    cb = chart.project(restrict(b, common))
    return chart.lift(_meet_full(ca, cb))


class Chart:
    """Coordinates on a subspace given by its reduced row echelon basis.

    Because the basis is reduced, the chart coordinates of a vector in the
    subspace are simply its entries at the pivot columns.
    """

    def __init__(self, space: RationalEchelon):
        self.space = space
        self.pivots = space.pivots()
        self.index = {c: k for k, c in enumerate(self.pivots)}
        self.basis = space.basis()

    @property
    def dim(self) -> int:
        return len(self.pivots)

    def coords(self, v: SparseVec) -> SparseVec:
        return {self.index[c]: x for c, x in v.items() if c in self.index}

    def vector(self, y: SparseVec) -> SparseVec:
        return _combine(self.basis, y)

    def project(self, lat: EchelonLattice) -> EchelonLattice:
        return _echelon(lat.p, self.dim, [self.coords(r) for r in lat.sparse_rows()])

    def lift(self, lat: EchelonLattice) -> EchelonLattice:
        return _echelon(lat.p, self.space.n, [self.vector(r) for r in lat.sparse_rows()])

    def restrict_map(self, t: LinearMap) -> LinearMap:
        """Matrix of a map preserving the subspace, in chart coordinates."""
        cols = [self.coords(t(b)) for b in self.basis]
        inv = None
        if t._inverse_cols is not None:
            ti = t.inverse()
            inv = [self.coords(ti(b)) for b in self.basis]
        return LinearMap(cols, inv)


# ---------------------------------------------------------------- maps ----

def _as_map(t) -> LinearMap:
    if isinstance(t, LinearMap):
        return t
    rows = [[Q(x) for x in row] for row in t]
    if det(rows) == 0:
        raise ValueError("singular matrix")
    return LinearMap.from_dense(rows)


def apply_map(t, lat: EchelonLattice) -> EchelonLattice:
    """Canonical form of ``t(lat)`` for an invertible matrix or map ``t``."""
    tm = _as_map(t)
    if tm.n != lat.n:
        raise ValueError("dimension mismatch between map and lattice")
    return _echelon(lat.p, lat.n, [tm(r) for r in lat.sparse_rows()])


def preimage(t, lat: EchelonLattice) -> EchelonLattice:
    return apply_map(_as_map(t).inverse(), lat)


# ------------------------------------------------------- relative divisors ----

def rel_divisors(a: EchelonLattice, b: EchelonLattice) -> list:
    """Relative elementary divisor valuations of ``b`` inside ``a``.

    The minimum is the largest ``s`` with ``b ⊆ p**s a``; the maximum the
    smallest ``t`` with ``p**t a ⊆ b``.
    """
    _check_compatible(a, b)
    if a.rank != b.rank:
        raise ValueError("span mismatch")
    mat = []
    for row in b.sparse_rows():
        co = coordinates(a, row)
        if co is None:
            raise ValueError("span mismatch")
        mat.append({j: x for j, x in enumerate(co) if x})
    return smith_valuations(mat, a.p)


def smith_valuations(rows: list, p: int) -> list:
    """Valuations of the Smith invariants of a square nonsingular sparse matrix."""
    rows = [dict(r) for r in rows]
    out = []
    while rows:
        best = None
        for i, r in enumerate(rows):
            for j, x in r.items():
                v = val_p(x, p)
                if best is None or v < best[0]:
                    best = (v, i, j)
        if best is None:
            raise ValueError("singular relative position")
        v, i, j = best
        out.append(v)
        prow = rows.pop(i)
        piv = prow[j]
        new_rows = []
        for r in rows:
            x = r.get(j)
            if x:
                r = axpy(r, -(x / piv), prow)
            r.pop(j, None)
            new_rows.append(r)
        rows = new_rows
    return sorted(out)


def stable_chain(start: EchelonLattice, step) -> EchelonLattice:
    """Iterate ``N -> step(N)`` (a shrinking operation) until it is stationary."""
    cur = start
    while True:
        nxt = step(cur)
        if nxt == cur:
            return cur
        cur = nxt

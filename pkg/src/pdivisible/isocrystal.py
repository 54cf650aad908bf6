"""Latticed F-isocrystals given by a rational matrix.

The lattice M is always the standard lattice and ``matrix`` holds phi in a
basis of M, columns being images of basis vectors.  Frobenius acts trivially
on scalars, so phi is an honest linear map.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

from gmpy2 import mpq

from .exactnum import lattice as lat
from .exactnum.lattice import EchelonLattice
from .exactnum.matrices import (
    LinearMap,
    RationalEchelon,
    block_diag,
    charpoly,
    det,
    identity,
    inverse,
    is_integral,
    kron_map,
    matmul,
    matpow,
    newton_slopes,
    scale,
    sparse,
    to_matrix,
    transpose,
)
from .exactnum.scalars import ONE, ZERO, Q, check_prime, ppow, val_p


class CrystalError(ValueError):
    """Raised for inputs that do not define a valid crystal."""


@dataclass(frozen=True)
class SlopeBlock:
    slope: mpq
    basis: tuple  # tuple of dense vectors (tuples of mpq)

    @property
    def dim(self) -> int:
        return len(self.basis)


@dataclass(frozen=True)
class SlopeSplitting:
    blocks: tuple  # SlopeBlock, sorted by slope

    @property
    def slopes(self) -> list:
        return [b.slope for b in self.blocks]

    def slope_multiset(self) -> list:
        return sorted(b.slope for b in self.blocks for _ in range(b.dim))


@dataclass(frozen=True)
class HodgeNewtonProfile:
    rank: int
    c: int | None  # None for crystals that are not Dieudonné
    d: int | None
    slopes: tuple
    dieudonne: bool
    isoclinic: bool
    ordinary: bool


@dataclass(frozen=True, eq=False)
class FIsocrystal:
    p: int
    matrix: tuple
    splitting: SlopeSplitting | None = None
    dieudonne: bool = field(default=False)

    @property
    def rank(self) -> int:
        return len(self.matrix)

    def __eq__(self, other) -> bool:
        return (isinstance(other, FIsocrystal) and self.p == other.p
                and self.matrix == other.matrix and self.splitting == other.splitting)

    def __hash__(self) -> int:
        return hash((self.p, self.matrix))

    @cached_property
    def dense(self) -> list:
        return [list(row) for row in self.matrix]

    @cached_property
    def dense_inverse(self) -> list:
        return inverse(self.dense)

    @cached_property
    def map(self) -> LinearMap:
        return LinearMap.from_dense(self.dense, self.dense_inverse)

    @cached_property
    def lattice(self) -> EchelonLattice:
        return lat.standard(self.p, self.rank)

    def power(self, q: int) -> list:
        return _power_cache(self, q)


def _power_cache(f: FIsocrystal, q: int) -> list:
    cache = f.__dict__.setdefault("_powers", {0: identity(f.rank), 1: f.dense})
    if q < 0:
        return matpow(f.dense_inverse, -q)
    if q not in cache:
        top = max(k for k in cache if k <= q)
        m = cache[top]
        for k in range(top + 1, q + 1):
            m = matmul(f.dense, m)
            cache[k] = m
    return cache[q]


# ------------------------------------------------------------ construction ----

def _is_dieudonne(p: int, a: list, a_inv: list) -> bool:
    return is_integral(a, p) and is_integral(scale(p, a_inv), p)


def _span_matrix(vectors: list) -> RationalEchelon:
    return RationalEchelon(len(vectors[0]) if vectors else 0, [sparse(v) for v in vectors])


def _apply(a: list, v) -> list:
    return [sum((x * y for x, y in zip(row, v) if x), ZERO) for row in a]


def _solve(b: list, c: list):
    """X with B X = C for B of full column rank, or None when inconsistent."""
    n, k = len(b), len(b[0])
    work = [list(b[i]) + list(c[i]) for i in range(n)]
    row = 0
    for col in range(k):
        piv = next((i for i in range(row, n) if work[i][col]), None)
        if piv is None:
            raise CrystalError("basis vectors are linearly dependent")
        work[row], work[piv] = work[piv], work[row]
        inv = ONE / work[row][col]
        work[row] = [x * inv for x in work[row]]
        for i in range(n):
            f = work[i][col]
            if i != row and f:
                work[i] = [x - f * y for x, y in zip(work[i], work[row])]
        row += 1
    if any(x for i in range(k, n) for x in work[i][k:]):
        return None
    return [w[k:] for w in work[:k]]


def _restricted_matrix(a: list, basis: list) -> list:
    """Matrix of ``a`` on the span of ``basis`` in that basis."""
    bm = transpose([list(v) for v in basis])
    out = _solve(bm, matmul(a, bm))
    if out is None:
        raise CrystalError("splitting subspace is not phi-stable")
    return out


def _verify_splitting(p: int, a: list, splitting: SlopeSplitting) -> None:
    n = len(a)
    slopes = splitting.slopes
    if len(set(slopes)) != len(slopes):
        raise CrystalError("declared slopes are not pairwise distinct")
    if sorted(slopes) != slopes:
        raise CrystalError("declared slopes are not sorted")
    all_vectors = [v for b in splitting.blocks for v in b.basis]
    if any(len(v) != n for v in all_vectors):
        raise CrystalError("splitting vectors have the wrong length")
    if len(all_vectors) != n or _span_matrix(all_vectors).dim != n:
        raise CrystalError("splitting subspaces do not form a direct sum of the ambient space")
    for block in splitting.blocks:
        if block.dim == 0:
            raise CrystalError("empty splitting block")
        sub = _restricted_matrix(a, list(block.basis))
        found = set(newton_slopes(charpoly(sub), p))
        if len(found) != 1:
            raise CrystalError(f"block declared with slope {block.slope} is not isoclinic")
        (s,) = found
        if s != block.slope:
            raise CrystalError(f"declared slope {block.slope} differs from computed slope {s}")


def make_splitting(blocks) -> SlopeSplitting:
    """Build a splitting from ``(slope, basis)`` pairs; sorted by slope."""
    out = []
    for slope, basis in blocks:
        out.append(SlopeBlock(Q(slope), tuple(tuple(Q(x) for x in v) for v in basis)))
    out.sort(key=lambda b: b.slope)
    return SlopeSplitting(tuple(out))


def new_isocrystal(p: int, a, splitting=None, *, verify: bool = True) -> FIsocrystal:
    """Validated crystal from a prime, a square rational matrix and an optional splitting.

    ``splitting`` may be a :class:`SlopeSplitting` or a list of
    ``(slope, basis)`` pairs.  ``verify=False`` skips the splitting check and
    is meant for splittings produced by the builders in this module.
    """
    check_prime(p)
    try:
        m = to_matrix(a)
    except (TypeError, ValueError) as exc:
        raise CrystalError(str(exc)) from None
    n = len(m)
    if any(len(row) != n for row in m):
        raise CrystalError("matrix is not square")
    if n and det(m) == 0:
        raise CrystalError("matrix is singular")
    if splitting is not None and not isinstance(splitting, SlopeSplitting):
        splitting = make_splitting(splitting)
    if splitting is not None and verify:
        _verify_splitting(p, m, splitting)
    inv = inverse(m) if n else []
    f = FIsocrystal(p, tuple(tuple(row) for row in m), splitting, _is_dieudonne(p, m, inv))
    if n:
        f.__dict__["dense_inverse"] = inv
    return f


# ------------------------------------------------------------- invariants ----

def newton_slope_multiset(f: FIsocrystal) -> list:
    if f.splitting is not None:
        return f.splitting.slope_multiset()
    if f.rank == 0:
        return []
    return newton_slopes(charpoly(f.dense), f.p)


def classify(f: FIsocrystal) -> HodgeNewtonProfile:
    slopes = tuple(newton_slope_multiset(f))
    c = d = None
    if f.dieudonne:
        if f.rank:
            divs = lat.rel_divisors(f.lattice, lat.apply_map(f.map, f.lattice))
        else:
            divs = []
        d = sum(1 for x in divs if x == 1)
        c = f.rank - d
    isoclinic = len(set(slopes)) <= 1
    ordinary = c is not None and list(slopes) == [mpq(0)] * c + [mpq(1)] * d
    return HodgeNewtonProfile(f.rank, c, d, slopes, f.dieudonne, isoclinic, ordinary)


def isoclinic_slope(f: FIsocrystal) -> mpq:
    slopes = set(newton_slope_multiset(f))
    if len(slopes) != 1:
        raise CrystalError("crystal is not isoclinic")
    return slopes.pop()


def is_isoclinic(f: FIsocrystal) -> bool:
    return len(set(newton_slope_multiset(f))) <= 1


def power_divisors(f: FIsocrystal, q: int) -> list:
    """Relative divisors of phi^q(M) inside M."""
    image = lat.apply_map(LinearMap.from_dense(f.power(q)), f.lattice)
    return lat.rel_divisors(f.lattice, image)


def alpha_beta_delta(f: FIsocrystal, q: int) -> tuple:
    if q < 1:
        raise ValueError("q must be at least 1")
    divs = power_divisors(f, q)
    return divs[0], divs[-1], divs[-1] - divs[0]


# ------------------------------------------------------------ constructions ----

def splitting_of(f: FIsocrystal) -> SlopeSplitting:
    """The stored splitting, or one computed over the rationals."""
    if f.splitting is not None:
        return f.splitting
    slopes = sorted(set(newton_slope_multiset(f)))
    if len(slopes) <= 1:
        basis = [tuple(row) for row in identity(f.rank)]
        return SlopeSplitting((SlopeBlock(slopes[0] if slopes else mpq(0), tuple(basis)),))
    return _rational_splitting(f)


def _rational_splitting(f: FIsocrystal) -> SlopeSplitting:
    import sympy

    x = sympy.Symbol("x")
    coeffs = charpoly(f.dense)
    poly = sympy.Poly([sympy.Rational(int(c.numerator), int(c.denominator)) for c in reversed(coeffs)], x)
    _, factors = sympy.factor_list(poly)
    by_slope: dict = {}
    for fac, mult in factors:
        fac = sympy.Poly(fac, x)
        fc = [mpq(int(sympy.fraction(c)[0]), int(sympy.fraction(c)[1])) for c in reversed(fac.all_coeffs())]
        s = set(newton_slopes(fc, f.p))
        if len(s) != 1:
            raise CrystalError("slope decomposition is not defined over the rationals")
        by_slope.setdefault(s.pop(), []).append(_poly_pow(fc, mult))
    blocks = []
    for slope in sorted(by_slope):
        g = [ONE]
        for fc in by_slope[slope]:
            g = _poly_mul(g, fc)
        kernel = _kernel(_poly_at(g, f.dense))
        blocks.append(SlopeBlock(slope, tuple(tuple(v) for v in kernel)))
    return SlopeSplitting(tuple(blocks))


def _poly_mul(a: list, b: list) -> list:
    out = [ZERO] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] += x * y
    return out


def _poly_pow(a: list, k: int) -> list:
    out = [ONE]
    for _ in range(k):
        out = _poly_mul(out, a)
    return out


def _poly_at(coeffs: list, a: list) -> list:
    n = len(a)
    result = [[ZERO] * n for _ in range(n)]
    for c in reversed(coeffs):
        result = matmul(result, a)
        for i in range(n):
            result[i][i] += c
    return result


def _kernel(m: list) -> list:
    """Basis of the right kernel of ``m``."""
    from .exactnum.matrices import left_kernel

    n = len(m)
    cols = [{i: m[i][j] for i in range(n) if m[i][j]} for j in range(len(m[0]))]
    return [[v.get(j, ZERO) for j in range(len(cols))] for v in left_kernel(cols, n)]


def dual(f: FIsocrystal) -> FIsocrystal:
    if not f.dieudonne:
        raise CrystalError("dual requires a Dieudonné crystal")
    a = scale(f.p, transpose(f.dense_inverse))
    split = None
    if f.splitting is not None:
        s_inv = inverse(transpose([list(v) for b in f.splitting.blocks for v in b.basis]))
        blocks, k = [], 0
        for b in f.splitting.blocks:
            rows = s_inv[k:k + b.dim]
            k += b.dim
            blocks.append(SlopeBlock(1 - b.slope, tuple(tuple(r) for r in rows)))
        blocks.sort(key=lambda blk: blk.slope)
        split = SlopeSplitting(tuple(blocks))
    return new_isocrystal(f.p, a, split, verify=False)


def _merge_blocks(blocks: list) -> SlopeSplitting:
    merged: dict = {}
    for slope, basis in blocks:
        merged.setdefault(slope, []).extend(basis)
    return SlopeSplitting(tuple(SlopeBlock(s, tuple(merged[s])) for s in sorted(merged)))


def _try_splitting(f: FIsocrystal):
    try:
        return splitting_of(f)
    except CrystalError:
        return None


def direct_sum(f1: FIsocrystal, f2: FIsocrystal) -> FIsocrystal:
    if f1.p != f2.p:
        raise CrystalError(f"prime mismatch: {f1.p} vs {f2.p}")
    if f1.rank == 0:
        return f2
    if f2.rank == 0:
        return f1
    a = block_diag(f1.dense, f2.dense)
    s1, s2 = _try_splitting(f1), _try_splitting(f2)
    split = None
    if s1 is not None and s2 is not None:
        r1, r2 = f1.rank, f2.rank
        blocks = [(b.slope, [tuple(v) + (ZERO,) * r2 for v in b.basis]) for b in s1.blocks]
        blocks += [(b.slope, [(ZERO,) * r1 + tuple(v) for v in b.basis]) for b in s2.blocks]
        split = _merge_blocks(blocks)
    return new_isocrystal(f1.p, a, split, verify=False)


def _block_frames(f: FIsocrystal, split: SlopeSplitting):
    """Per block: basis vectors and the matching rows of the inverse frame."""
    vecs = [list(v) for b in split.blocks for v in b.basis]
    s_inv = inverse(transpose(vecs))
    out, k = [], 0
    for b in split.blocks:
        out.append((b.slope, vecs[k:k + b.dim], s_inv[k:k + b.dim]))
        k += b.dim
    return out


def hom_map(f1: FIsocrystal, f2: FIsocrystal) -> LinearMap:
    """phi on Hom(M1, M2) in row-major coordinates: X -> A2 X A1^{-1}."""
    cols = kron_map(f2.dense, transpose(f1.dense_inverse))
    inv = kron_map(f2.dense_inverse, transpose(f1.dense))
    return LinearMap(cols, inv)


def hom_blocks(f1: FIsocrystal, f2: FIsocrystal) -> list:
    """Induced slope blocks of Hom(F1, F2) as (slope, sparse vectors)."""
    fr1 = _block_frames(f1, splitting_of(f1))
    fr2 = _block_frames(f2, splitting_of(f2))
    blocks: dict = {}
    for a1, _, duals in fr1:
        for a2, vecs, _ in fr2:
            out = blocks.setdefault(a2 - a1, [])
            for v in vecs:
                for g in duals:
                    w = {i * len(g) + j: x * y for i, x in enumerate(v) if x for j, y in enumerate(g) if y}
                    out.append(w)
    return sorted(blocks.items())


def hom_crystal(f1: FIsocrystal, f2: FIsocrystal) -> FIsocrystal:
    if f1.p != f2.p:
        raise CrystalError(f"prime mismatch: {f1.p} vs {f2.p}")
    n = f1.rank * f2.rank
    a = hom_map(f1, f2).to_dense()
    split = None
    if _try_splitting(f1) is not None and _try_splitting(f2) is not None:
        blocks = []
        for slope, vecs in hom_blocks(f1, f2):
            blocks.append(SlopeBlock(slope, tuple(tuple(v.get(i, ZERO) for i in range(n)) for v in vecs)))
        split = SlopeSplitting(tuple(blocks))
    return new_isocrystal(f1.p, a, split, verify=False)


def rebase(f: FIsocrystal, sub: EchelonLattice) -> FIsocrystal:
    """The crystal phi on a full-rank lattice ``sub``, written in its basis."""
    if sub.rank != f.rank or sub.p != f.p:
        raise CrystalError("sublattice must be full rank with the same prime")
    pm = transpose(sub.basis())  # columns = basis vectors of sub
    pinv = inverse(pm)
    a = matmul(pinv, matmul(f.dense, pm))
    split = None
    if f.splitting is not None:
        blocks = []
        for b in f.splitting.blocks:
            vecs = [tuple(_apply(pinv, v)) for v in b.basis]
            blocks.append(SlopeBlock(b.slope, tuple(vecs)))
        split = SlopeSplitting(tuple(blocks))
    return new_isocrystal(f.p, a, split, verify=False)


def isogeny_kappa(f: FIsocrystal, sub: EchelonLattice) -> tuple:
    """Exponent of the isogeny from ``sub`` into M, and the crystal on ``sub``."""
    if sub.n != f.rank or sub.p != f.p or not sub.full_rank:
        raise CrystalError("sublattice must be full rank in the ambient space of the crystal")
    if not lat.is_sublattice(sub, f.lattice):
        raise CrystalError("sublattice is not contained in M")
    kappa = lat.min_power(f.lattice, sub)
    g = rebase(f, sub)
    if f.dieudonne and not g.dieudonne:
        raise CrystalError("sublattice is not a Dieudonné submodule")
    return kappa, g


# ------------------------------------------------------- periods and heights ----

def _reduced(slope: mpq) -> tuple:
    return int(slope.denominator), int(slope.numerator)


def quasi_special_period(f: FIsocrystal, bound: int | None = None):
    """Smallest t (multiple of the reduced denominator) with phi^t(M) = p^{t*slope} M."""
    slope = isoclinic_slope(f)
    r1, d1 = _reduced(slope)
    bound = f.rank if bound is None else bound
    t = r1
    while t <= bound:
        e = t * d1 // r1
        m = scale(ppow(f.p, -e), f.power(t))
        if is_integral(m, f.p) and is_integral(inverse(m), f.p):
            return t, e
        t += r1
    return None


def manin_submodule(f: FIsocrystal, quasi: bool = False) -> EchelonLattice:
    """Largest psi-stable sublattice of M, psi = p^{-d1} phi^{r1} (or p^{-d} phi^r)."""
    slope = isoclinic_slope(f)
    if quasi:
        r1, d1 = f.rank, slope * f.rank
        d1 = int(d1)
    else:
        r1, d1 = _reduced(slope)
    psi = LinearMap.from_dense(scale(ppow(f.p, -d1), f.power(r1)))
    return lat.stable_chain(f.lattice, lambda n: lat.meet(n, lat.apply_map(psi, n)))


def manin_heights(f: FIsocrystal) -> tuple:
    if f.rank == 0:
        return 0, 0
    u = lat.min_power(f.lattice, manin_submodule(f))
    v = lat.min_power(f.lattice, manin_submodule(f, quasi=True))
    return u, v


# ----------------------------------------------------------- extension ----

def thm53_extension(p: int, d: int, gamma) -> FIsocrystal:
    """Rank-2d Dieudonné crystal with slopes 1/d and (d-1)/d glued by an extension.

    phi on the lattice N spanned by e_1..e_2d is
    e_1 -> p e_2, e_i -> e_{i+1} (2 <= i < d), e_d -> e_1 and
    e_{d+i} -> p e_{d+i+1} (1 <= i < d), e_2d -> e_{d+1};
    M is N enlarged by (gamma/p) e_1 + (1/p) e_{d+1}.
    """
    check_prime(p)
    gamma = Q(gamma)
    if d < 3:
        raise CrystalError("the extension needs d >= 3")
    if gamma == 0 or val_p(gamma, p) != 0:
        raise CrystalError("gamma must be a p-adic unit")
    r = 2 * d
    a = [[ZERO] * r for _ in range(r)]

    def put(src: int, dst: int, coeff) -> None:  # 1-indexed basis vectors
        a[dst - 1][src - 1] = Q(coeff)

    put(1, 2, p)
    for i in range(2, d):
        put(i, i + 1, 1)
    put(d, 1, 1)
    for i in range(1, d):
        put(d + i, d + i + 1, p)
    put(2 * d, d + 1, 1)
    low = [tuple(ONE if j == i else ZERO for j in range(r)) for i in range(d)]
    high = [tuple(ONE if j == d + i else ZERO for j in range(r)) for i in range(d)]
    split = make_splitting([(mpq(1, d), low), (mpq(d - 1, d), high)])
    base = new_isocrystal(p, a, split, verify=False)
    extra = [ZERO] * r
    extra[0] = gamma / p
    extra[d] = mpq(1, p)
    m = lat.join(base.lattice, lat.hnf_basis(p, [extra]))
    out = rebase(base, m)
    _verify_splitting(p, out.dense, out.splitting)
    return out

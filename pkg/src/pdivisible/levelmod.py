"""Level modules O+, O0, O- of End(M) and the level torsion they define.

Endomorphisms are flattened row-major, so End(M) is Q^(r*r) with the
standard lattice, and phi acts by X -> A X A^{-1}.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import gmpy2

from .exactnum import lattice as lat
from .exactnum.lattice import Chart, EchelonLattice
from .exactnum.matrices import LinearMap, RationalEchelon, intersect_subspaces, sparse
from .exactnum.scalars import ONE, ZERO, Q, val_p
from .isocrystal import (
    CrystalError,
    FIsocrystal,
    classify,
    hom_blocks,
    hom_map,
    isoclinic_slope,
    new_isocrystal,
    splitting_of,
)


@dataclass(frozen=True)
class LevelModule:
    plus: EchelonLattice
    zero: EchelonLattice
    minus: EchelonLattice
    total: EchelonLattice


@dataclass(frozen=True)
class TorsionReport:
    level: int
    epsilon: int
    rule: str  # "a" or "b"
    pair_torsions: dict = field(default_factory=dict)  # (i, j) -> l_ij over slope blocks
    flags: tuple = ()


@dataclass
class _EndData:
    p: int
    n: int
    phi: LinearMap
    plus: RationalEchelon
    zero: RationalEchelon
    minus: RationalEchelon


def _end_data(f: FIsocrystal) -> _EndData:
    try:
        splitting_of(f)
    except CrystalError as exc:
        raise CrystalError(f"level modules need a rational slope splitting: {exc}") from None
    n = f.rank * f.rank
    spaces = {1: RationalEchelon(n), 0: RationalEchelon(n), -1: RationalEchelon(n)}
    for slope, vecs in hom_blocks(f, f):
        sign = (slope > 0) - (slope < 0)
        for v in vecs:
            spaces[sign].add(v)
    return _EndData(f.p, n, hom_map(f, f), spaces[1], spaces[0], spaces[-1])


def _limit(p: int, space: RationalEchelon, phi: LinearMap, mode: str) -> EchelonLattice:
    """Largest sublattice of ``space ∩ End(M)`` with the requested iterates integral.

    ``mode`` is "forward" (phi^q for q >= 0), "backward" (phi^-q) or "both".
    """
    if space.dim == 0:
        return EchelonLattice(p, space.n, ())
    chart = Chart(space)
    start = chart.project(lat.saturation(p, space))
    t = chart.restrict_map(phi)
    t_inv = t.inverse()

    if mode == "forward":
        def step(n):
            return lat.meet(n, lat.apply_map(t_inv, n))
    elif mode == "backward":
        def step(n):
            return lat.meet(n, lat.apply_map(t, n))
    else:
        def step(n):
            return lat.meet(lat.meet(n, lat.apply_map(t, n)), lat.apply_map(t_inv, n))

    return chart.lift(lat.stable_chain(start, step))


def level_module(f: FIsocrystal) -> LevelModule:
    data = _end_data(f)
    plus = _limit(data.p, data.plus, data.phi, "forward")
    zero = _limit(data.p, data.zero, data.phi, "both")
    minus = _limit(data.p, data.minus, data.phi, "backward")
    total = lat.join_all(data.p, data.n, [plus, zero, minus])
    return LevelModule(plus, zero, minus, total)


def _not_in_p_end(lattice: EchelonLattice) -> bool:
    p = lattice.p
    return any(val_p(x, p) <= 0 for row in lattice.rows for _, x in row)


def level_torsion(f: FIsocrystal, *, pair_torsions: bool = True) -> TorsionReport:
    if f.rank == 0:
        return TorsionReport(0, 0, "b")
    lm = level_module(f)
    end = lat.standard(f.p, f.rank * f.rank)
    flags = []
    # End(M)/p is a simple algebra, so a two-sided ideal is nilpotent mod p
    # exactly when all its generators vanish mod p
    if lm.total == end and (_not_in_p_end(lm.plus) or _not_in_p_end(lm.minus)):
        level, eps, rule = 1, 1, "a"
    else:
        level, eps, rule = lat.min_power(end, lm.total), 0, "b"
    if f.dieudonne:
        prof = classify(f)
        if prof.c * prof.d == 0 and level != 0:
            flags.append("etale-or-multiplicative-but-positive-level")
        expected_eps = 1 if prof.ordinary and prof.c and prof.d else 0
        if expected_eps != eps:
            flags.append("epsilon-disagrees-with-ordinary-check")
        if prof.c * prof.d == 0:
            level, eps, rule = 0, 0, "b"
    pairs = _pair_table(f, level) if pair_torsions else {}
    return TorsionReport(level, eps, rule, pairs, tuple(flags))


# ------------------------------------------------------------- block pairs ----

def block_crystals(f: FIsocrystal) -> list | None:
    """Crystals on M ∩ V_i when M is the direct sum of these, else ``None``."""
    split = splitting_of(f)
    pieces = []
    for b in split.blocks:
        space = RationalEchelon(f.rank, [sparse(v) for v in b.basis])
        pieces.append((b.slope, lat.saturation(f.p, space)))
    if len(pieces) == 1:
        return [f]
    if lat.join_all(f.p, f.rank, [x for _, x in pieces]) != f.lattice:
        return None
    out = []
    for slope, piece in pieces:
        basis = piece.sparse_rows()
        cols = []
        for b in basis:
            co = lat.coordinates(piece, f.map(b))
            cols.append(co)
        k = len(basis)
        a = [[cols[j][i] for j in range(k)] for i in range(k)]
        out.append(new_isocrystal(f.p, a, [(slope, [[ONE if i == j else ZERO for j in range(k)] for i in range(k)])],
                                  verify=False))
    return out


def _pair_table(f: FIsocrystal, level: int) -> dict:
    blocks = block_crystals(f)
    if blocks is None:
        return {}
    if len(blocks) == 1:
        return {(0, 0): level}
    table = {}
    for i, fi in enumerate(blocks):
        for j, fj in enumerate(blocks):
            table[(i, j)] = pair_level_torsion(fi, fj)
    return table


def pair_level_torsion(f1: FIsocrystal, f2: FIsocrystal) -> int:
    """Level torsion of Hom(M1, M2) for isoclinic F1, F2."""
    if f1.p != f2.p:
        raise CrystalError(f"prime mismatch: {f1.p} vs {f2.p}")
    a1, a2 = isoclinic_slope(f1), isoclinic_slope(f2)
    n = f1.rank * f2.rank
    if n == 0:
        return 0
    space = RationalEchelon(n, [{i: ONE} for i in range(n)])
    phi = hom_map(f1, f2)
    limit = _limit(f1.p, space, phi, "forward" if a1 <= a2 else "backward")
    return lat.min_power(lat.standard(f1.p, n), limit)


# ------------------------------------------------------------- subalgebras ----

def _vec(m) -> dict:
    return sparse([Q(x) for row in m for x in row])


def _unvec(v: dict, r: int) -> list:
    out = [[ZERO] * r for _ in range(r)]
    for k, x in v.items():
        out[k // r][k % r] = x
    return out


def _mul(a: list, b: list) -> list:
    r = len(a)
    return [[sum((a[i][k] * b[k][j] for k in range(r) if a[i][k]), ZERO) for j in range(r)] for i in range(r)]


class _FpSpan:
    """Echelon span of vectors over F_p (python ints)."""

    def __init__(self, p: int):
        self.p = p
        self.rows: dict = {}

    def add(self, v: list) -> bool:
        p = self.p
        v = [x % p for x in v]
        for c, row in self.rows.items():
            if v[c]:
                f = v[c]
                v = [(x - f * y) % p for x, y in zip(v, row)]
        head = next((i for i, x in enumerate(v) if x), None)
        if head is None:
            return False
        inv = pow(v[head], -1, p)
        v = [(x * inv) % p for x in v]
        for c, row in self.rows.items():
            if row[head]:
                f = row[head]
                self.rows[c] = [(x - f * y) % p for x, y in zip(row, v)]
        self.rows[head] = v
        return True

    def basis(self) -> list:
        return [self.rows[c] for c in sorted(self.rows)]

    @property
    def dim(self) -> int:
        return len(self.rows)


def ideal_is_nilpotent_mod_p(g: EchelonLattice, generators: list, r: int) -> bool:
    """Whether the two-sided ideal of ``g`` generated by ``generators`` is nilpotent mod p."""
    p = g.p
    gmats = [_unvec(v, r) for v in g.sparse_rows()]
    k = len(gmats)

    def coords(m) -> list:
        co = lat.coordinates(g, _vec(m))
        if co is None:
            raise CrystalError("element outside the subalgebra")
        out = []
        for x in co:
            if val_p(x, p) < 0:
                raise CrystalError("element outside the subalgebra lattice")
            out.append(int(x.numerator * gmpy2.invert(x.denominator, p)) % p if x else 0)
        return out

    def element(c: list) -> list:
        m = [[ZERO] * r for _ in range(r)]
        for ci, gm in zip(c, gmats):
            if ci:
                for i in range(r):
                    for j in range(r):
                        if gm[i][j]:
                            m[i][j] += ci * gm[i][j]
        return m

    ideal = _FpSpan(p)
    for gen in generators:
        ideal.add(coords(_unvec(gen, r)))
    grown = True
    while grown:
        grown = False
        for c in list(ideal.basis()):
            x = element(c)
            for gm in gmats:
                grown |= ideal.add(coords(_mul(gm, x)))
                grown |= ideal.add(coords(_mul(x, gm)))
    if ideal.dim == 0:
        return True
    ideal_elems = [element(c) for c in ideal.basis()]
    power = ideal_elems
    prev_dim = ideal.dim
    for _ in range(k + 1):
        nxt = _FpSpan(p)
        for x in power:
            for y in ideal_elems:
                nxt.add(coords(_mul(x, y)))
        if nxt.dim == 0:
            return True
        if nxt.dim == prev_dim:
            return False
        prev_dim = nxt.dim
        power = [element(c) for c in nxt.basis()]
    return False


def _check_subalgebra(f: FIsocrystal, space: RationalEchelon, data: _EndData) -> None:
    r = f.rank
    if not space.contains(_vec([[ONE if i == j else ZERO for j in range(r)] for i in range(r)])):
        raise CrystalError("the identity endomorphism is not in g")
    mats = [_unvec(v, r) for v in space.basis()]
    for x in mats:
        for y in mats:
            if not space.contains(_vec(_mul(x, y))):
                raise CrystalError("g is not closed under multiplication")
    graded = sum(intersect_subspaces(space, s).dim for s in (data.plus, data.zero, data.minus))
    if graded != space.dim:
        raise CrystalError("g is not slope-graded")


def subalgebra_level_torsion(f: FIsocrystal, g_basis) -> TorsionReport:
    r = f.rank
    n = r * r
    data = _end_data(f)
    space = RationalEchelon(n, [_vec(m) for m in g_basis])
    _check_subalgebra(f, space, data)
    g = lat.saturation(f.p, space)
    lm = level_module(f)
    pieces = [lat.meet(g, part) for part in (lm.plus, lm.zero, lm.minus) if part.rank]
    o_g = lat.join_all(f.p, n, pieces)
    if o_g == g:
        gens = [v for part in (lm.plus, lm.minus) if part.rank
                for v in lat.meet(g, part).sparse_rows()]
        if gens and not ideal_is_nilpotent_mod_p(g, gens, r):
            return TorsionReport(1, 1, "a")
    return TorsionReport(lat.min_power(g, o_g), 0, "b")

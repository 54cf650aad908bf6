import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pdivisible.exactnum import lattice as lat
from pdivisible.exactnum.scalars import val_p
from pdivisible.isocrystal import (
    CrystalError,
    alpha_beta_delta,
    classify,
    direct_sum,
    dual,
    hom_map,
    new_isocrystal,
    quasi_special_period,
)
from pdivisible.levelmod import (
    _not_in_p_end,
    _unvec,
    _mul,
    _vec,
    block_crystals,
    ideal_is_nilpotent_mod_p,
    level_module,
    level_torsion,
    pair_level_torsion,
    subalgebra_level_torsion,
)
from pdivisible.permcrystal import cycle_isocrystal, datum_from_cycles, datum_from_words, to_isocrystal
from pdivisible.verify import subalgebra_families

from strategies import PRIMES, conjugate, data, dieudonne, isoclinic, unimodular

EX462 = datum_from_cycles([(9, 10, 5, 11, 12, 6, 7, 8), (1, 2, 13, 3, 4, 14, 15, 16)], range(1, 9))


def end_lattice(f):
    return lat.standard(f.p, f.rank * f.rank)


def integral(v, p):
    return all(val_p(x, p) >= 0 for x in v.values())


# ---------------------------------------------------------------- examples ----

def test_etale_has_level_zero():
    rep = level_torsion(new_isocrystal(2, [[1, 0], [0, 1]]))
    assert (rep.level, rep.epsilon) == (0, 0)


def test_ordinary_fires_rule_a():
    f = new_isocrystal(2, [[1, 0], [0, 2]])
    assert level_module(f).total == end_lattice(f)
    rep = level_torsion(f)
    assert (rep.level, rep.epsilon, rep.rule) == (1, 1, "a")


def test_isoclinic_level_module_is_o_zero():
    f = new_isocrystal(2, [[0, 2], [1, 0]])
    lm = level_module(f)
    assert lm.plus.rank == 0 and lm.minus.rank == 0
    assert lm.total == lm.zero
    end = end_lattice(f)
    assert lat.is_sublattice(lat.scaled(end, 1), lm.total)
    assert lm.total != end
    assert level_torsion(f).level == 1


def test_golden_sixteen_dimensional_crystal():
    rep = level_torsion(to_isocrystal(EX462, 2))
    assert rep.level == 3 and rep.rule == "b"
    # both cycles have slope 1/2, so the slope splitting has a single block
    assert rep.pair_torsions == {(0, 0): 3}


def test_non_dieudonne_crystal_is_accepted():
    f = new_isocrystal(2, [[0, 4], [1, 0]])
    assert not f.dieudonne
    rep = level_torsion(f)
    assert (rep.level, rep.flags) == (2, ())


# -------------------------------------------------------------- invariants ----

@settings(max_examples=40, deadline=None)
@given(f=dieudonne())
def test_level_module_stability(f):
    lm = level_module(f)
    phi = hom_map(f, f)
    phi_inv = phi.inverse()
    if lm.plus.rank:
        assert all(lat.contains(lm.plus, phi(v)) for v in lm.plus.sparse_rows())
    if lm.minus.rank:
        assert all(lat.contains(lm.minus, phi_inv(v)) for v in lm.minus.sparse_rows())
    if lm.zero.rank:
        assert all(lat.contains(lm.zero, phi(v)) and lat.contains(lm.zero, phi_inv(v))
                   for v in lm.zero.sparse_rows())
    end = end_lattice(f)
    assert lat.is_sublattice(lm.total, end)
    rep = level_torsion(f, pair_torsions=False)
    prof = classify(f)
    if rep.rule == "b" and prof.c * prof.d:
        assert lat.is_sublattice(lat.scaled(end, rep.level), lm.total)


@settings(max_examples=25, deadline=None)
@given(f=dieudonne(max_total=4))
def test_nilpotent_parts_are_nilpotent_algebras(f):
    lm = level_module(f)
    r = f.rank
    for part in (lm.plus, lm.minus):
        mats = [_unvec(v, r) for v in part.sparse_rows()]
        for x in mats:
            for y in mats:
                assert lat.contains(part, _vec(_mul(x, y)))
        for x in mats:
            power = x
            for _ in range(r):
                power = _mul(power, x)
            assert all(v == 0 for row in power for v in row)


@settings(max_examples=40, deadline=None)
@given(f=isoclinic())
def test_isoclinic_level_is_max_delta(f):
    period = quasi_special_period(f)
    window = period[0] if period else 2 * f.rank
    deltas = [alpha_beta_delta(f, q)[2] for q in range(1, window + 1)]
    level = level_torsion(f).level
    assert level == max(deltas)
    assert all(alpha_beta_delta(f, q)[2] <= level for q in range(1, 2 * window + 1))


@settings(max_examples=40, deadline=None)
@given(f=dieudonne())
def test_blockwise_formula(f):
    rep = level_torsion(f)
    assert rep.pair_torsions
    assert rep.level == max(rep.epsilon, *rep.pair_torsions.values())
    blocks = block_crystals(f)
    for i, fi in enumerate(blocks):
        assert rep.pair_torsions[(i, i)] == level_torsion(fi).level
        for j, fj in enumerate(blocks):
            assert rep.pair_torsions[(i, j)] == rep.pair_torsions[(j, i)]


@settings(max_examples=40, deadline=None)
@given(f=dieudonne())
def test_duality(f):
    assert level_torsion(f).level == level_torsion(dual(f)).level


@settings(max_examples=25, deadline=None)
@given(f=dieudonne(max_total=4), seed=st.integers(0, 10 ** 6))
def test_forward_integral_elements_lie_in_plus_and_zero(f, seed):
    lm = level_module(f)
    target = lat.join(lm.plus, lm.zero)
    if target.rank == 0:
        return
    phi = hom_map(f, f)
    rng = random.Random(seed)
    rows = target.sparse_rows()
    horizon = 2 * f.rank * f.rank
    for _ in range(6):
        picks = rng.sample(rows, min(len(rows), rng.randint(1, 3)))
        v = {}
        for row in picks:
            c = rng.choice([1, -1, 2])
            for k, x in row.items():
                v[k] = v.get(k, 0) + c * x
        v = {k: x / f.p for k, x in v.items() if x}
        w, ok = dict(v), integral(v, f.p)
        for _ in range(horizon):
            if not ok:
                break
            w = phi(w)
            ok = integral(w, f.p)
        if ok:
            assert lat.contains(target, v)


@settings(max_examples=25, deadline=None)
@given(w=st.text("01", min_size=2, max_size=6), p=PRIMES, data_=st.data())
def test_sum_with_dual_formula(w, p, data_):
    d = w.count("1")
    r = len(w)
    if not d < r <= 2 * d:
        return
    f = cycle_isocrystal(datum_from_words([w]), 0, p)
    f = conjugate(f, data_.draw(unimodular(r, p)))
    period = quasi_special_period(f)[0]
    expected = 0
    for q in range(1, period + 1):
        a, _, delta = alpha_beta_delta(f, q)
        expected = max(expected, delta, q - 2 * a)
    assert level_torsion(direct_sum(f, dual(f))).level == expected


# ---------------------------------------------------------- nilpotence test ----

@settings(max_examples=30, deadline=None)
@given(f=dieudonne(max_total=4))
def test_generic_nilpotence_matches_simple_algebra_shortcut(f):
    lm = level_module(f)
    end = end_lattice(f)
    gens = [v for part in (lm.plus, lm.minus) for v in part.sparse_rows()]
    if not gens:
        return
    shortcut = not (_not_in_p_end(lm.plus) or _not_in_p_end(lm.minus))
    assert ideal_is_nilpotent_mod_p(end, gens, f.rank) == shortcut


# -------------------------------------------------------------- pair torsion ----

@settings(max_examples=30, deadline=None)
@given(p=PRIMES, data_=st.data())
def test_pair_symmetry(p, data_):
    f1 = data_.draw(isoclinic(max_len=4, p=p))
    f2 = data_.draw(isoclinic(max_len=4, p=p))
    assert pair_level_torsion(f1, f2) == pair_level_torsion(f2, f1)


@settings(max_examples=30, deadline=None)
@given(f=isoclinic())
def test_pair_with_itself(f):
    assert pair_level_torsion(f, f) == level_torsion(f).level


def test_pair_errors():
    with pytest.raises(CrystalError):
        pair_level_torsion(new_isocrystal(2, [[1]]), new_isocrystal(3, [[1]]))
    with pytest.raises(CrystalError):
        pair_level_torsion(new_isocrystal(2, [[1, 0], [0, 2]]), new_isocrystal(2, [[1]]))


# --------------------------------------------------------------- subalgebras ----

def test_full_and_scalar_subalgebras():
    f = new_isocrystal(2, [[1, 0], [0, 2]])
    units = [[[1 if (i, j) == (s, t) else 0 for j in range(2)] for i in range(2)] for s in range(2) for t in range(2)]
    full = subalgebra_level_torsion(f, units)
    ref = level_torsion(f)
    assert (full.level, full.rule) == (ref.level, ref.rule)
    assert subalgebra_level_torsion(f, [[[1, 0], [0, 1]]]).level == 0


def test_line_plus_supersingular_plane_subalgebra():
    f = new_isocrystal(2, [[1, 0, 0], [0, 0, 2], [0, 1, 0]])
    assert level_torsion(f).level == 1
    g = [
        [[1, 0, 0], [0, 1, 0], [0, 0, 1]],
        [[0, 0, 0], [1, 0, 0], [0, 0, 0]],
        [[0, 0, 0], [0, 0, 0], [1, 0, 0]],
    ]
    rep = subalgebra_level_torsion(f, g)
    assert rep.level == 0


def test_subalgebra_errors():
    f = new_isocrystal(2, [[1, 0], [0, 2]])
    with pytest.raises(CrystalError):  # no identity
        subalgebra_level_torsion(f, [[[1, 0], [0, 0]]])
    with pytest.raises(CrystalError):  # not closed
        subalgebra_level_torsion(f, [[[1, 0], [0, 1]], [[0, 1], [0, 0]], [[0, 0], [1, 0]]])
    with pytest.raises(CrystalError):  # not slope-graded
        subalgebra_level_torsion(f, [[[1, 0], [0, 1]], [[0, 1], [0, 1]]])


@settings(max_examples=30, deadline=None)
@given(d=data(max_total=5), p=PRIMES, seed=st.integers(0, 1000))
def test_monotony(d, p, seed):
    f = to_isocrystal(d, p)
    full = level_torsion(f, pair_torsions=False).level
    for basis in subalgebra_families(d, random.Random(seed)).values():
        assert subalgebra_level_torsion(f, basis).level <= full

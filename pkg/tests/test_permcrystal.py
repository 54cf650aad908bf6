import random

import numpy as np
import pytest
from gmpy2 import mpq
from hypothesis import given, settings
from hypothesis import strategies as st

from pdivisible.isocrystal import alpha_beta_delta, manin_heights, quasi_special_period
from pdivisible.levelmod import level_torsion
from pdivisible.permcrystal import (
    DatumError,
    _eta_array,
    _eta_back_array,
    canonical_rotation,
    closed_formula_pair_max,
    cycle_isocrystal,
    cycle_pair_deficiency,
    cycle_stats,
    datum_from_cycles,
    datum_from_words,
    dual_datum,
    eta,
    is_minimal,
    is_quasi_special,
    is_special,
    isomorphism_key,
    necklace_class,
    new_datum,
    pair_deficiency,
    pair_deficiency_reference,
    pair_window,
    perm_level_torsion,
    perm_manin_heights,
    pi_power,
    primitive_root,
    slope_of,
    to_isocrystal,
)

from strategies import data

EX462 = datum_from_cycles([(9, 10, 5, 11, 12, 6, 7, 8), (1, 2, 13, 3, 4, 14, 15, 16)], range(1, 9))
SWAP = new_datum(2, [2, 1], [1])


def circular(d):
    return datum_from_words(["1" * d + "0" * d])


def relabel(datum, perm):
    """The same datum after renaming s to perm[s - 1]."""
    pi = [0] * datum.r
    for s in range(1, datum.r + 1):
        pi[perm[s - 1] - 1] = perm[datum.pi[s - 1] - 1]
    return new_datum(datum.r, pi, [perm[s - 1] for s in datum.marked])


# ------------------------------------------------------------------ datum ----

def test_datum_validation():
    assert (SWAP.c, SWAP.d) == (1, 1)
    assert (EX462.r, EX462.c, EX462.d) == (16, 8, 8)
    with pytest.raises(DatumError):
        new_datum(2, [1, 1], [])
    with pytest.raises(DatumError):
        new_datum(2, [2, 1], [3])
    with pytest.raises(DatumError):
        new_datum(0, [], [])


def test_json_round_trip():
    out = EX462.to_json()
    assert new_datum(out["r"], out["pi"], out["marked"]) == EX462


# -------------------------------------------------------------------- eta ----

def test_golden_eta_tables():
    assert [eta(EX462, q, 9) for q in range(1, 9)] == [0, 0, 1, 1, 1, 2, 3, 4]
    assert [eta(EX462, q, 1) for q in range(1, 9)] == [1, 2, 2, 3, 4, 4, 4, 4]


def test_all_marked_eta():
    d = datum_from_words(["111", "11"])
    assert all(eta(d, q, s) == q for q in range(1, 8) for s in range(1, 6))


@settings(max_examples=50, deadline=None)
@given(d=data(), a=st.integers(0, 12), b=st.integers(0, 12))
def test_eta_cocycle(d, a, b):
    for s in range(1, d.r + 1):
        assert eta(d, a + b, s) == eta(d, a, s) + eta(d, b, pi_power(d, a, s))


# ------------------------------------------------------------------ cycles ----

def test_golden_cycle_stats():
    first = next(cs for cs in cycle_stats(EX462) if 9 in cs.support)
    assert [first.delta(q) for q in range(1, 9)] == [1, 2, 2, 2, 2, 2, 1, 0]
    assert first.special_period == (8, 4)
    assert first.slope == mpq(1, 2)


@pytest.mark.parametrize("d", range(1, 7))
def test_circular_stats(d):
    (cs,) = cycle_stats(circular(d))
    assert (cs.alpha(d), cs.beta(d)) == (0, d)
    assert perm_level_torsion(circular(d)).level == d
    assert is_minimal(circular(d)) == (d == 1)


def test_pure_cycle_stats():
    (cs,) = cycle_stats(datum_from_words(["1111"]))
    assert all(cs.alpha(q) == cs.beta(q) == q for q in range(1, 10))


@settings(max_examples=50, deadline=None)
@given(d=data())
def test_stats_match_eta(d):
    for cs in cycle_stats(d):
        for q in range(1, 2 * cs.r + 1):
            values = [eta(d, q, s) for s in cs.support]
            assert (cs.alpha(q), cs.beta(q)) == (min(values), max(values))


# -------------------------------------------------------------- deficiency ----

def test_golden_pair_deficiencies():
    assert pair_deficiency(EX462, 9, 1) == 3
    assert perm_level_torsion(EX462).level == 3
    # the defining rule gives ℓ(e_1, e_9) = 0; the larger value sits on the swapped pair
    assert pair_deficiency(EX462, 1, 9) == 0


def test_two_cycle_pair_deficiencies():
    assert pair_deficiency(SWAP, 1, 1) == pair_deficiency(SWAP, 2, 2) == 0
    assert pair_deficiency(SWAP, 2, 1) == 1
    assert pair_deficiency(SWAP, 1, 2) == 0
    assert perm_level_torsion(SWAP).level == 1


@settings(max_examples=60, deadline=None)
@given(d=data())
def test_vectorized_matches_reference(d):
    for s in range(1, d.r + 1):
        for t in range(1, d.r + 1):
            assert pair_deficiency(d, s, t) == pair_deficiency_reference(d, s, t)


@settings(max_examples=60, deadline=None)
@given(d=data())
def test_cycle_pair_reduction_and_symmetry(d):
    k = len(d.cycles)
    for i in range(k):
        for j in range(k):
            best = max(pair_deficiency(d, s, t) for s in d.cycles[i] for t in d.cycles[j])
            assert cycle_pair_deficiency(d, i, j) == best
            assert best == max(pair_deficiency(d, t, s) for s in d.cycles[i] for t in d.cycles[j])
            assert best == closed_formula_pair_max(d, i, j)


@settings(max_examples=60, deadline=None)
@given(d=data())
def test_zero_drift_directions_agree(d):
    for s in range(1, d.r + 1):
        for t in range(1, d.r + 1):
            if slope_of(d, s) != slope_of(d, t):
                continue
            qs = np.arange(1, pair_window(d, s, t) + 1)
            forward = max(0, int((_eta_array(d, qs, t) - _eta_array(d, qs, s)).max()))
            backward = max(0, int((_eta_back_array(d, qs, s) - _eta_back_array(d, qs, t)).max()))
            assert forward == backward


@settings(max_examples=40, deadline=None)
@given(d=data())
def test_window_is_long_enough(d):
    for s in range(1, d.r + 1):
        for t in range(1, d.r + 1):
            w = pair_window(d, s, t)
            assert pair_deficiency(d, s, t, window=3 * w) == pair_deficiency(d, s, t)


# ----------------------------------------------------------------- torsion ----

def test_etale_and_multiplicative():
    for d in (datum_from_words(["000", "0"]), datum_from_words(["11", "1"])):
        rep = perm_level_torsion(d)
        assert (rep.level, rep.epsilon) == (0, 0)


def test_ordinary_epsilon():
    rep = perm_level_torsion(datum_from_words(["0", "11"]))
    assert (rep.level, rep.epsilon, rep.rule) == (1, 1, "a")


@settings(max_examples=60, deadline=None)
@given(d=data())
def test_bounds(d):
    level = perm_level_torsion(d).level
    assert level <= min(d.c, d.d)
    assert (level <= 1) == is_minimal(d)


@settings(max_examples=40, deadline=None)
@given(d=data(max_total=5), p=st.sampled_from([2, 3, 5]))
def test_engines_agree(d, p):
    rep = perm_level_torsion(d)
    assert level_torsion(to_isocrystal(d, p)).level == rep.level
    heights = perm_manin_heights(d)
    for i, cs in enumerate(cycle_stats(d)):
        g = cycle_isocrystal(d, i, p)
        assert manin_heights(g) == heights[i]
        assert quasi_special_period(g) == cs.special_period
        for q in range(1, cs.special_period[0] + 1):
            assert alpha_beta_delta(g, q) == (cs.alpha(q), cs.beta(q), cs.delta(q))


def test_to_isocrystal_convention():
    f = to_isocrystal(SWAP, 3)
    assert f.dense == [[0, 1], [3, 0]]
    assert to_isocrystal(datum_from_words(["00"]), 2).dense == [[0, 1], [1, 0]]


# ---------------------------------------------------------- classification ----

def test_minimal_examples():
    assert is_minimal(SWAP)
    assert not is_minimal(circular(2))
    assert is_minimal(datum_from_words(["000", "11"]))


def test_special_and_heights():
    assert is_special(SWAP) and is_quasi_special(SWAP)
    assert perm_manin_heights(SWAP) == [(0, 0)]
    assert not is_special(circular(2))
    assert perm_manin_heights(circular(2))[0][0] >= 1
    assert perm_manin_heights(datum_from_words(["110"])) == [(0, 0)]


# -------------------------------------------------------------- necklaces ----

def test_necklace_examples():
    assert canonical_rotation("0110") == "0011"
    assert necklace_class(datum_from_words(["0110"])) == necklace_class(datum_from_words(["1001"]))
    words = necklace_class(EX462)
    assert len(words) == 2 and words[0] != words[1]
    assert all(len(w) == 8 and w.count("1") == 4 for w in words)


@settings(max_examples=50, deadline=None)
@given(d=data(), seed=st.integers(0, 10 ** 6))
def test_class_invariance_under_relabeling(d, seed):
    perm = list(range(1, d.r + 1))
    random.Random(seed).shuffle(perm)
    e = relabel(d, perm)
    assert necklace_class(e) == necklace_class(d)
    assert isomorphism_key(e) == isomorphism_key(d)
    assert perm_level_torsion(e).level == perm_level_torsion(d).level


def test_isomorphism_key_merges_repeated_words():
    assert primitive_root("0101") == ("01", 2)
    a, b = datum_from_words(["0101"]), datum_from_words(["01", "01"])
    assert necklace_class(a) != necklace_class(b)
    assert isomorphism_key(a) == isomorphism_key(b)
    assert perm_level_torsion(a).level == perm_level_torsion(b).level


@settings(max_examples=50, deadline=None)
@given(d=data())
def test_isomorphism_key_is_coarser(d):
    key = isomorphism_key(d)
    assert sum(map(len, key)) == d.r
    assert sum(w.count("1") for w in key) == d.d


# ------------------------------------------------------------------ duality ----

def test_dual_examples():
    assert dual_datum(SWAP).marked == frozenset({2})
    assert perm_level_torsion(dual_datum(SWAP)).level == 1
    assert perm_level_torsion(dual_datum(circular(3))).level == 3


@settings(max_examples=50, deadline=None)
@given(d=data())
def test_duality(d):
    e = dual_datum(d)
    assert dual_datum(e) == d
    assert perm_level_torsion(e).level == perm_level_torsion(d).level
    for cs, ce in zip(cycle_stats(d), cycle_stats(e)):
        assert ce.slope == 1 - cs.slope
        for q in range(1, 2 * cs.r + 1):
            assert ce.alpha(q) == q - cs.beta(q)
    assert [u for u, _ in perm_manin_heights(e)] == [u for u, _ in perm_manin_heights(d)]

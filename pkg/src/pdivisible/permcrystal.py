"""Invariants of F-cyclic Dieudonné modules computed from the permutation alone.

A datum ``(r, pi, S)`` stands for the module with basis e_1..e_r and
phi(e_s) = p^[s in S] e_pi(s).  Everything here is integer combinatorics on
the marks met along the cycles of ``pi``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from gmpy2 import mpq

from .isocrystal import FIsocrystal, make_splitting, new_isocrystal
from .levelmod import TorsionReport


class DatumError(ValueError):
    """Raised for malformed permutation data."""


@dataclass(frozen=True)
class PermutationDatum:
    r: int
    pi: tuple  # pi[s-1] is the image of s
    marked: frozenset

    @property
    def c(self) -> int:
        return self.r - len(self.marked)

    @property
    def d(self) -> int:
        return len(self.marked)

    @cached_property
    def cycles(self) -> tuple:
        """Cycles as tuples starting at their smallest element, following pi."""
        seen = set()
        out = []
        for s in range(1, self.r + 1):
            if s in seen:
                continue
            cyc = [s]
            seen.add(s)
            t = self.pi[s - 1]
            while t != s:
                cyc.append(t)
                seen.add(t)
                t = self.pi[t - 1]
            out.append(tuple(cyc))
        return tuple(out)

    @cached_property
    def _position(self) -> dict:
        return {s: (i, k) for i, cyc in enumerate(self.cycles) for k, s in enumerate(cyc)}

    @cached_property
    def order(self) -> int:
        return math.lcm(*(len(c) for c in self.cycles)) if self.r else 1

    def to_json(self) -> dict:
        return {"r": self.r, "pi": list(self.pi), "marked": sorted(self.marked)}


def new_datum(r: int, pi, marked) -> PermutationDatum:
    if isinstance(r, bool) or not isinstance(r, int) or r < 1:
        raise DatumError("r must be a positive integer")
    try:
        pi = tuple(int(x) for x in pi)
        marked = frozenset(int(x) for x in marked)
    except (TypeError, ValueError):
        raise DatumError("pi and marked must contain integers") from None
    if len(pi) != r or sorted(pi) != list(range(1, r + 1)):
        raise DatumError("pi is not a bijection of {1..r}")
    if not marked <= set(range(1, r + 1)):
        raise DatumError("marked set is not a subset of {1..r}")
    return PermutationDatum(r, pi, marked)


def datum_from_cycles(cycles, marked) -> PermutationDatum:
    """Datum from a list of cycles (1-indexed) covering {1..r}."""
    r = sum(len(c) for c in cycles)
    pi = [0] * r
    for cyc in cycles:
        for k, s in enumerate(cyc):
            pi[s - 1] = cyc[(k + 1) % len(cyc)]
    return new_datum(r, pi, marked)


def datum_from_words(words) -> PermutationDatum:
    """Datum whose cycles carry the given mark words, laid out consecutively."""
    cycles, marked, start = [], [], 1
    for w in words:
        cyc = list(range(start, start + len(w)))
        marked += [s for s, ch in zip(cyc, w) if ch == "1"]
        cycles.append(cyc)
        start += len(w)
    return datum_from_cycles(cycles, marked)


# -------------------------------------------------------------------- eta ----

def _marks(datum: PermutationDatum, cyc: tuple) -> list:
    return [1 if s in datum.marked else 0 for s in cyc]


def _prefix(datum: PermutationDatum) -> list:
    """Per cycle: prefix sums of the marks over two laps of the cycle."""
    cached = datum.__dict__.get("_prefix")
    if cached is None:
        cached = []
        for cyc in datum.cycles:
            marks = _marks(datum, cyc)
            acc = [0]
            for x in marks + marks:
                acc.append(acc[-1] + x)
            cached.append(acc)
        datum.__dict__["_prefix"] = cached
    return cached


def eta(datum: PermutationDatum, q: int, s: int) -> int:
    """Number of marked elements among s, pi(s), ..., pi^{q-1}(s)."""
    if q < 0:
        raise ValueError("q must be non-negative")
    i, k = datum._position[s]
    acc = _prefix(datum)[i]
    length = len(datum.cycles[i])
    full, rem = divmod(q, length)
    return full * acc[length] + acc[k + rem] - acc[k]


def pi_power(datum: PermutationDatum, q: int, s: int) -> int:
    i, k = datum._position[s]
    cyc = datum.cycles[i]
    return cyc[(k + q) % len(cyc)]


# ----------------------------------------------------------------- cycles ----

@dataclass(frozen=True)
class CycleStats:
    support: tuple
    r: int
    d: int
    c: int
    slope: mpq
    special_period: tuple  # (r2, d2)
    partial_min: tuple  # min over the cycle of marks met in t steps, t = 0..r-1
    partial_max: tuple

    @property
    def reduced(self) -> tuple:
        """(r1, d1): the slope in lowest terms."""
        return int(self.slope.denominator), int(self.slope.numerator)

    def alpha(self, q: int) -> int:
        full, rem = divmod(q, self.r)
        return full * self.d + self.partial_min[rem]

    def beta(self, q: int) -> int:
        full, rem = divmod(q, self.r)
        return full * self.d + self.partial_max[rem]

    def delta(self, q: int) -> int:
        return self.beta(q) - self.alpha(q)

    def alpha_array(self, qs: np.ndarray) -> np.ndarray:
        return (qs // self.r) * self.d + np.asarray(self.partial_min)[qs % self.r]

    def beta_array(self, qs: np.ndarray) -> np.ndarray:
        return (qs // self.r) * self.d + np.asarray(self.partial_max)[qs % self.r]

    @property
    def pure(self) -> bool:
        return self.d in (0, self.r)


def _cycle_stats(marks: list, support: tuple) -> CycleStats:
    length = len(marks)
    d = sum(marks)
    prefix = [0]
    for x in marks + marks:
        prefix.append(prefix[-1] + x)
    partial = [[prefix[k + t] - prefix[k] for k in range(length)] for t in range(length)]
    pmin = tuple(min(row) for row in partial)
    pmax = tuple(max(row) for row in partial)
    slope = mpq(d, length)
    r1, d1 = int(slope.denominator), int(slope.numerator)
    period = None
    for t in range(r1, length + 1, r1):
        full, rem = divmod(t, length)
        if pmin[rem] == pmax[rem]:
            period = (t, t * d1 // r1)
            break
    return CycleStats(support, length, d, length - d, slope, period, pmin, pmax)


def cycle_stats(datum: PermutationDatum) -> list:
    cached = datum.__dict__.get("_stats")
    if cached is None:
        cached = [_cycle_stats(_marks(datum, cyc), cyc) for cyc in datum.cycles]
        datum.__dict__["_stats"] = cached
    return cached


def slope_of(datum: PermutationDatum, s: int) -> mpq:
    return cycle_stats(datum)[datum._position[s][0]].slope


def datum_alpha_beta(datum: PermutationDatum, q: int) -> tuple:
    """alpha and beta of the whole module for phi^q."""
    stats = cycle_stats(datum)
    return min(cs.alpha(q) for cs in stats), max(cs.beta(q) for cs in stats)


# ------------------------------------------------------------- deficiency ----

def _window(len_s: int, len_t: int, zero_drift: bool) -> int:
    o = math.lcm(len_s, len_t)
    return o if zero_drift else o * (o + 1)


def _eta_array(datum: PermutationDatum, qs: np.ndarray, s: int) -> np.ndarray:
    i, k = datum._position[s]
    acc = np.asarray(_prefix(datum)[i])
    length = len(datum.cycles[i])
    return (qs // length) * acc[length] + acc[k + qs % length] - acc[k]


def _eta_back_array(datum: PermutationDatum, qs: np.ndarray, s: int) -> np.ndarray:
    """eta_q(pi^{-q}(s)) for each q."""
    i, k = datum._position[s]
    acc = np.asarray(_prefix(datum)[i])
    length = len(datum.cycles[i])
    start = (k - qs) % length
    return (qs // length) * acc[length] + acc[start + qs % length] - acc[start]


def pair_window(datum: PermutationDatum, s: int, t: int) -> int:
    i, j = datum._position[s][0], datum._position[t][0]
    same = slope_of(datum, s) == slope_of(datum, t)
    return _window(len(datum.cycles[i]), len(datum.cycles[j]), same)


def pair_deficiency(datum: PermutationDatum, s: int, t: int, window: int | None = None) -> int:
    """The least l with p^l phi^{+-q}(e_s (x) e_t^*) integral for all q >= 1.

    Forward iterates are used when the slope of s is at least that of t,
    backward iterates otherwise.
    """
    if window is None:
        window = pair_window(datum, s, t)
    qs = np.arange(1, window + 1)
    if slope_of(datum, s) >= slope_of(datum, t):
        gap = _eta_array(datum, qs, t) - _eta_array(datum, qs, s)
    else:
        gap = _eta_back_array(datum, qs, s) - _eta_back_array(datum, qs, t)
    return max(0, int(gap.max()))


def pair_deficiency_reference(datum: PermutationDatum, s: int, t: int, window: int | None = None) -> int:
    """Plain-loop version of :func:`pair_deficiency` straight from the definition."""
    if window is None:
        window = pair_window(datum, s, t)
    forward = slope_of(datum, s) >= slope_of(datum, t)
    best = 0
    for q in range(1, window + 1):
        if forward:
            gap = eta(datum, q, t) - eta(datum, q, s)
        else:
            gap = eta(datum, q, pi_power(datum, -q, s)) - eta(datum, q, pi_power(datum, -q, t))
        best = max(best, gap)
    return best


def cycle_pair_deficiency(datum: PermutationDatum, i: int, j: int, window: int | None = None) -> int:
    """Maximum of pair deficiencies over s in cycle i and t in cycle j.

    Since q -> pi^-q permutes a cycle, both directions reduce to the largest
    gap between beta of the lower-slope cycle and alpha of the other one.
    """
    stats = cycle_stats(datum)
    ci, cj = stats[i], stats[j]
    if window is None:
        window = _window(ci.r, cj.r, ci.slope == cj.slope)
    qs = np.arange(1, window + 1)
    if ci.slope >= cj.slope:
        gap = cj.beta_array(qs) - ci.alpha_array(qs)
    else:
        gap = ci.beta_array(qs) - cj.alpha_array(qs)
    return max(0, int(gap.max()))


def closed_formula_pair_max(datum: PermutationDatum, i: int, j: int) -> int:
    """Cycle-pair maximum of the printed closed formulas over q = 1..o.

    For e_s (x) e_t^* in the positive part the formula is
    max(0, eta_q(t) - eta_q(s)); otherwise max(0, eta_q(s) - eta_q(t)).
    """
    o = datum.order
    best = 0
    for s in datum.cycles[i]:
        for t in datum.cycles[j]:
            plus = eta(datum, o, s) > eta(datum, o, t)
            for q in range(1, o + 1):
                diff = eta(datum, q, t) - eta(datum, q, s)
                best = max(best, diff if plus else -diff)
    return best


def epsilon(datum: PermutationDatum) -> int:
    stats = cycle_stats(datum)
    if not all(cs.pure for cs in stats):
        return 0
    kinds = {cs.d == 0 for cs in stats}
    return 1 if len(kinds) == 2 else 0


def perm_level_torsion(datum: PermutationDatum, *, cross_check: bool = False) -> TorsionReport:
    """Level torsion (equal to the isomorphism number) with per-cycle-pair values."""
    k = len(datum.cycles)
    table = {}
    for i in range(k):
        for j in range(k):
            table[(i, j)] = cycle_pair_deficiency(datum, i, j)
    eps = epsilon(datum)
    level = max([eps, *table.values()])
    flags = []
    if cross_check:
        if any(closed_formula_pair_max(datum, i, j) != table[(i, j)] for i in range(k) for j in range(k)):
            flags.append("closed-formula-mismatch")
    return TorsionReport(level, eps, "a" if eps else "b", table, tuple(flags))


# --------------------------------------------------------- classifications ----

def is_minimal(datum: PermutationDatum) -> bool:
    for cs in cycle_stats(datum):
        r1, d1 = cs.reduced
        for q in range(1, cs.r + 1):
            floor = q * d1 // r1
            if cs.alpha(q) - floor < 0 or cs.beta(q) - floor > 1:
                return False
    return True


def is_special(datum: PermutationDatum) -> bool:
    return all(cs.special_period[0] == cs.reduced[0] for cs in cycle_stats(datum))


def is_quasi_special(datum: PermutationDatum) -> bool:
    # every F-cyclic module is quasi-special: phi^{r_i} fixes each cycle lattice up to p^{d_i}
    return True


def perm_manin_heights(datum: PermutationDatum) -> list:
    """Per cycle (u, v)."""
    out = []
    for cs in cycle_stats(datum):
        r1, d1 = cs.reduced
        r2 = cs.special_period[0]
        u = max(0, *(cs.beta(r1 * n) - d1 * n for n in range(1, r2 // r1 + 1)))
        v = max(0, cs.beta(cs.r) - cs.d)
        out.append((u, v))
    return out


# ---------------------------------------------------------------- classes ----

def canonical_rotation(word: str) -> str:
    return min(word[k:] + word[:k] for k in range(len(word))) if word else word


def cycle_words(datum: PermutationDatum) -> list:
    return ["".join("1" if s in datum.marked else "0" for s in cyc) for cyc in datum.cycles]


def necklace_class(datum: PermutationDatum) -> tuple:
    return tuple(sorted((canonical_rotation(w) for w in cycle_words(datum)), key=lambda w: (len(w), w)))


def primitive_root(word: str) -> tuple:
    """(u, k) with word = u * k and u primitive."""
    n = len(word)
    for size in range(1, n + 1):
        if n % size == 0 and word[:size] * (n // size) == word:
            return word[:size], n // size
    return word, 1


def isomorphism_key(datum: PermutationDatum) -> tuple:
    """Necklace class with every word replaced by copies of its primitive root.

    Over an algebraically closed field a cycle whose word is u^k gives the
    same module as k cycles with word u, so this key is coarser than
    :func:`necklace_class` exactly on non-primitive words.
    """
    words = []
    for w in necklace_class(datum):
        u, k = primitive_root(w)
        words += [canonical_rotation(u)] * k
    return tuple(sorted(words, key=lambda w: (len(w), w)))


def dual_datum(datum: PermutationDatum) -> PermutationDatum:
    return PermutationDatum(datum.r, datum.pi, frozenset(range(1, datum.r + 1)) - datum.marked)


def to_isocrystal(datum: PermutationDatum, p: int) -> FIsocrystal:
    """Matrix with column s equal to p^[s in S] times the unit vector at pi(s)."""
    r = datum.r
    a = [[0] * r for _ in range(r)]
    for s in range(1, r + 1):
        a[datum.pi[s - 1] - 1][s - 1] = p if s in datum.marked else 1
    groups: dict = {}
    for cs in cycle_stats(datum):
        groups.setdefault(cs.slope, []).extend(cs.support)
    blocks = []
    for slope in sorted(groups):
        basis = [[1 if j == s - 1 else 0 for j in range(r)] for s in sorted(groups[slope])]
        blocks.append((slope, basis))
    return new_isocrystal(p, a, make_splitting(blocks), verify=False)


def cycle_isocrystal(datum: PermutationDatum, i: int, p: int) -> FIsocrystal:
    """The crystal of a single cycle, relabeled along the cycle."""
    cyc = datum.cycles[i]
    words = "".join("1" if s in datum.marked else "0" for s in cyc)
    return to_isocrystal(datum_from_words([words]), p)

"""Exhaustive and sampled checks of the inequalities and equalities on small data.

Every suite is a pure function of its parameters (including the seed).  A
suite is a list of hashable cases plus a check function returning failure
reasons and integer counters; counters are summed, so aggregation does not
depend on the order or the number of worker processes.
"""

from __future__ import annotations

import csv
import io
import json
import random
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations

from gmpy2 import mpq

from .exactnum import lattice as lat
from .exactnum.scalars import format_rational
from .isocrystal import (
    CrystalError,
    alpha_beta_delta,
    classify,
    dual,
    isogeny_kappa,
    manin_heights,
    manin_submodule,
    quasi_special_period,
    rebase,
    thm53_extension,
)
from .levelmod import block_crystals, level_torsion, subalgebra_level_torsion
from .permcrystal import (
    PermutationDatum,
    cycle_isocrystal,
    cycle_stats,
    datum_alpha_beta,
    datum_from_words,
    dual_datum,
    is_minimal,
    necklace_class,
    pair_deficiency,
    perm_level_torsion,
    perm_manin_heights,
    to_isocrystal,
)


# the rank-16 datum with two 8-cycles of slope 1/2 whose level is 3 = 2 + 2 - 1
GOLDEN_TWO_CYCLE = ("00011011", "00100111")


# ------------------------------------------------------------ enumeration ----

@lru_cache(maxsize=None)
def necklaces(length: int, weight: int) -> tuple:
    """Binary necklaces (minimal rotations) with the given length and number of ones."""
    found = set()
    for ones in combinations(range(length), weight):
        w = "".join("1" if i in ones else "0" for i in range(length))
        found.add(min(w[k:] + w[:k] for k in range(length)))
    return tuple(sorted(found))


def _all_necklaces(max_len: int) -> list:
    return [(w, n, k) for n in range(1, max_len + 1) for k in range(n + 1) for w in necklaces(n, k)]


def class_words(c: int, d: int) -> list:
    """Multisets of necklaces with total length c+d and total weight d."""
    r = c + d
    if r < 1 or c < 0 or d < 0:
        raise ValueError("need c, d >= 0 with c + d >= 1")
    items = sorted(_all_necklaces(r), key=lambda x: (x[1], x[0]))
    out = []

    def extend(start: int, length: int, weight: int, acc: list) -> None:
        if length == 0:
            if weight == 0:
                out.append(tuple(acc))
            return
        for idx in range(start, len(items)):
            w, n, k = items[idx]
            if n > length:
                break
            if k <= weight:
                acc.append(w)
                extend(idx, length - n, weight - k, acc)
                acc.pop()

    extend(0, r, d, [])
    return out


def enumerate_classes(c: int, d: int) -> list:
    """One representative datum per necklace class with the given Hodge numbers."""
    return [datum_from_words(words) for words in class_words(c, d)]


def classes_up_to(max_rank: int) -> list:
    out = []
    for r in range(1, max_rank + 1):
        for d in range(r + 1):
            out.extend(class_words(r - d, d))
    return out


# ---------------------------------------------------------------- results ----

@dataclass
class SuiteResult:
    name: str
    params: dict
    cases: int
    failures: list
    seconds: float
    details: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_json(self, timing: bool = True) -> dict:
        out = {
            "suite": self.name,
            "params": {k: str(v) for k, v in sorted(self.params.items())},
            "cases": str(self.cases),
            "failures": self.failures,
            "details": {k: str(v) for k, v in sorted(self.details.items())},
        }
        if timing:
            out["seconds"] = f"{self.seconds:.3f}"
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["suite", "params", "cases", "failures", "seconds"])
        params = ";".join(f"{k}={v}" for k, v in sorted(self.params.items()))
        writer.writerow([self.name, params, self.cases, len(self.failures), f"{self.seconds:.3f}"])
        return buf.getvalue()


def _words_json(words) -> dict:
    d = datum_from_words(words)
    return {"words": list(words), **d.to_json()}


def _datum(words) -> PermutationDatum:
    return datum_from_words(words)


# ----------------------------------------------------------------- checks ----

def _check_traverso(case, params):
    d = _datum(case)
    level = perm_level_torsion(d).level
    if level > min(d.c, d.d):
        return [f"level {level} exceeds min(c, d) = {min(d.c, d.d)}"], {}
    return [], {}


def _check_mainb(case, params):
    d = _datum(case)
    level = perm_level_torsion(d).level
    minimal = is_minimal(d)
    if (level <= 1) != minimal:
        return [f"level {level} but minimal={minimal}"], {}
    return [], {"minimal": int(minimal)}


def _cycle_levels(d: PermutationDatum, report) -> list:
    return [report.pair_torsions[(i, i)] for i in range(len(d.cycles))]


def _check_sum_bound(case, params):
    d = _datum(case)
    rep = perm_level_torsion(d)
    levels = _cycle_levels(d, rep)
    bound = max([1, *levels, *(a + b - 1 for a, b in combinations(levels, 2))])
    fails = []
    if rep.level > bound:
        fails.append(f"level {rep.level} exceeds multi-cycle bound {bound}")
    strict = any(rep.level == a + b - 1 > max(a, b, 1) for a, b in combinations(levels, 2))
    counters = {"strict_equality_cases": int(strict)}
    if tuple(case) == GOLDEN_TWO_CYCLE:
        counters["golden_equality"] = int(strict)
        if not strict:
            fails.append(f"expected level = l_1 + l_2 - 1 with cycle levels {levels}, got {rep.level}")
    return fails, counters


def _check_pair_symmetry(case, params):
    d = _datum(case)
    fails = []
    for i, ci in enumerate(d.cycles):
        for j, cj in enumerate(d.cycles):
            forward = max(pair_deficiency(d, s, t) for s in ci for t in cj)
            swapped = max(pair_deficiency(d, t, s) for s in ci for t in cj)
            if forward != swapped:
                fails.append(f"cycles {i},{j}: {forward} vs swapped {swapped}")
    return fails, {}


def _check_duality(case, params):
    d = _datum(case)
    dd = dual_datum(d)
    fails = []
    if perm_level_torsion(d).level != perm_level_torsion(dd).level:
        fails.append("level differs from the dual")
    for q in range(1, 2 * d.order + 1):
        a, b = datum_alpha_beta(d, q)
        ad, bd = datum_alpha_beta(dd, q)
        if ad != q - b or bd != q - a:
            fails.append(f"q={q}: dual alpha/beta ({ad},{bd}) vs ({q - b},{q - a})")
            break
    if perm_manin_heights(d) != perm_manin_heights(dd):
        fails.append("Manin heights differ from the dual")
    if d.r <= params.get("matrix_rank", 4):
        p = params.get("prime", 2)
        if dual(to_isocrystal(d, p)).matrix != to_isocrystal(dd, p).matrix:
            fails.append("matrix dual differs from the complemented datum")
    return fails, {}


def crosscheck_case(d: PermutationDatum, p: int) -> list:
    """Differences between the permutation engine and the matrix engine."""
    fails = []
    f = to_isocrystal(d, p)
    rep_m = level_torsion(f)
    rep_p = perm_level_torsion(d)
    if rep_m.level != rep_p.level:
        fails.append(f"level: matrix {rep_m.level} vs perm {rep_p.level}")
    if rep_m.epsilon != rep_p.epsilon:
        fails.append(f"epsilon: matrix {rep_m.epsilon} vs perm {rep_p.epsilon}")
    if rep_m.flags:
        fails.append(f"matrix flags {rep_m.flags}")
    stats = cycle_stats(d)
    for i, cs in enumerate(stats):
        g = cycle_isocrystal(d, i, p)
        period = quasi_special_period(g)
        if period != cs.special_period:
            fails.append(f"cycle {i}: special period matrix {period} vs perm {cs.special_period}")
        for q in range(1, cs.special_period[0] + 1):
            if alpha_beta_delta(g, q) != (cs.alpha(q), cs.beta(q), cs.delta(q)):
                fails.append(f"cycle {i}, q={q}: alpha/beta/delta differ")
                break
        if manin_heights(g) != perm_manin_heights(d)[i]:
            fails.append(f"cycle {i}: Manin heights matrix {manin_heights(g)} vs perm {perm_manin_heights(d)[i]}")
    for q in range(1, d.order + 1):
        a, b, _ = alpha_beta_delta(f, q)
        if (a, b) != datum_alpha_beta(d, q):
            fails.append(f"q={q}: module alpha/beta differ")
            break
    # slope-block pair torsions against cycle-pair maxima
    blocks = {}
    for i, cs in enumerate(stats):
        blocks.setdefault(cs.slope, []).append(i)
    order = sorted(blocks)
    for (bi, bj), value in rep_m.pair_torsions.items():
        expect = max(rep_p.pair_torsions[(i, j)] for i in blocks[order[bi]] for j in blocks[order[bj]])
        if len(order) == 1:
            expect = max(expect, rep_p.epsilon)
        if value != expect:
            fails.append(f"block pair {bi},{bj}: matrix {value} vs perm {expect}")
    return fails


def _check_crosscheck(case, params):
    words, p = case
    return crosscheck_case(_datum(words), p), {}


def _check_cor52(case, params):
    d = _datum(case)
    level = perm_level_torsion(d).level
    if level > 2:
        return [], {}
    if (level <= 1) != is_minimal(d):
        return [f"level {level} with minimal={is_minimal(d)}"], {"covered": 1}
    return [], {"covered": 1}


def _check_thm53(case, params):
    d, p, gamma = case
    f = thm53_extension(p, d, gamma)
    prof = classify(f)
    fails = []
    if not f.dieudonne:
        fails.append("not Dieudonné")
    expect = sorted([mpq(1, d)] * d + [mpq(d - 1, d)] * d)
    if list(prof.slopes) != expect:
        fails.append(f"slopes {[format_rational(s) for s in prof.slopes]}")
    level = level_torsion(f).level
    if level > 2:
        fails.append(f"level {level} exceeds 2")
    return fails, {f"level_{level}": 1}


# -------------------------------------------------------------- isogenies ----

def random_dieudonne_sublattice(f, kappa: int, rng: random.Random, extra: int = 2):
    """A phi- and p*phi^{-1}-stable lattice between p^kappa M and M."""
    p, r = f.p, f.rank
    gens = [[rng.randrange(p ** kappa) for _ in range(r)] for _ in range(extra)]
    cur = lat.join(lat.scaled(f.lattice, kappa), lat.hnf_basis(p, gens, r)) if gens else lat.scaled(f.lattice, kappa)
    theta = f.map.inverse().scaled(p)
    while True:
        nxt = lat.join_all(p, r, [cur, lat.apply_map(f.map, cur), lat.apply_map(theta, cur)])
        if nxt == cur:
            return cur
        cur = nxt


def _isoclinic_chain_bounds(f, level: int) -> list:
    """Manin-height bounds u <= l <= j + 2u and l <= j~ + 2v for an isoclinic crystal."""
    fails = []
    u, v = manin_heights(f)
    if u > level:
        fails.append(f"u={u} exceeds level {level}")
    if v > u:
        fails.append(f"v={v} exceeds u={u}")
    j = level_torsion(rebase(f, manin_submodule(f)), pair_torsions=False).level
    jq = level_torsion(rebase(f, manin_submodule(f, quasi=True)), pair_torsions=False).level
    if level > j + 2 * u:
        fails.append(f"level {level} exceeds j + 2u = {j} + 2*{u}")
    if level > jq + 2 * v:
        fails.append(f"level {level} exceeds j~ + 2v = {jq} + 2*{v}")
    return fails


@lru_cache(maxsize=None)
def _isogeny_pools(max_rank: int) -> tuple:
    """Classes with c, d >= 1, and the isoclinic ones among them."""
    pool = [w for w in classes_up_to(max_rank) if 0 < sum(x.count("1") for x in w) < sum(map(len, w))]
    iso = [w for w in pool if len({mpq(x.count("1"), len(x)) for x in w}) == 1]
    return pool, iso


def _check_isogeny(case, params):
    index, seed, max_rank, p = case
    rng = random.Random(f"{seed}:{index}")
    pool, iso = _isogeny_pools(max_rank)
    words = rng.choice(iso if rng.random() < 0.5 else pool)
    d = _datum(words)
    f = to_isocrystal(d, p)
    target = rng.choice([1, 2])
    for _ in range(5):  # redraw a few times to avoid the trivial sublattice M
        sub = random_dieudonne_sublattice(f, target, rng, extra=rng.randint(1, 2))
        kappa, g = isogeny_kappa(f, sub)
        if kappa:
            break
    level_d = perm_level_torsion(d).level
    level_g = level_torsion(g, pair_torsions=False).level
    fails = []
    if level_d > level_g + 2 * kappa:
        fails.append(f"l_D={level_d} > l_D~ + 2k = {level_g} + 2*{kappa}")
    if level_g > level_d + 2 * kappa:
        fails.append(f"l_D~={level_g} > l_D + 2k = {level_d} + 2*{kappa}")
    counters = {"isoclinic": 0, f"kappa_{kappa}": 1}
    if len({cs.slope for cs in cycle_stats(d)}) == 1:
        counters["isoclinic"] = 1
        fails += _isoclinic_chain_bounds(f, level_d)
        fails += [f"sublattice: {x}" for x in _isoclinic_chain_bounds(g, level_g)]
    if fails:
        fails.append("sublattice basis " + json.dumps(sub.to_json()["basis"]))
    return fails, counters


# -------------------------------------------------------------- monotony ----

def _unit(r: int, s: int, t: int) -> list:
    return [[1 if (i, j) == (s, t) else 0 for j in range(r)] for i in range(r)]


def subalgebra_families(d: PermutationDatum, rng: random.Random) -> dict:
    """Scalar, block-diagonal (centralizer of the cycle idempotents) and parabolic subalgebras."""
    r = d.r
    ident = [[1 if i == j else 0 for j in range(r)] for i in range(r)]
    cyc_of = {s - 1: i for i, cyc in enumerate(d.cycles) for s in cyc}
    order = list(range(len(d.cycles)))
    rng.shuffle(order)
    rank = {c: k for k, c in enumerate(order)}
    centralizer = [_unit(r, s, t) for s in range(r) for t in range(r) if cyc_of[s] == cyc_of[t]]
    parabolic = [_unit(r, s, t) for s in range(r) for t in range(r) if rank[cyc_of[s]] <= rank[cyc_of[t]]]
    return {"scalar": [ident], "centralizer": centralizer, "parabolic": parabolic}


def _check_monotony(case, params):
    words, seed = case
    d = _datum(words)
    f = to_isocrystal(d, params.get("prime", 2))
    full = level_torsion(f, pair_torsions=False).level
    fails = []
    rng = random.Random(f"{seed}:{'|'.join(words)}")
    for name, basis in subalgebra_families(d, rng).items():
        sub = subalgebra_level_torsion(f, basis).level
        if sub > full:
            fails.append(f"{name}: l_G={sub} exceeds l_GL={full}")
    return fails, {}


# ---------------------------------------------------------------- runner ----

def _class_cases(params):
    return classes_up_to(params["max_rank"])


SUITES = {
    "traverso": (_class_cases, _check_traverso, {"max_rank": 10}),
    "mainB": (_class_cases, _check_mainb, {"max_rank": 10}),
    "sum_bound": (_class_cases, _check_sum_bound, {"max_rank": 10}),
    "pair_symmetry": (_class_cases, _check_pair_symmetry, {"max_rank": 8}),
    "duality": (_class_cases, _check_duality, {"max_rank": 8, "matrix_rank": 4, "prime": 2}),
    "crosscheck": (lambda prm: [(w, p) for w in classes_up_to(prm["max_rank"]) for p in prm["primes"]],
                   _check_crosscheck, {"max_rank": 8, "primes": (2, 3)}),
    "cor52": (_class_cases, _check_cor52, {"max_rank": 10}),
    "thm53": (lambda prm: [(d, p, g) for d in prm["ds"] for p in prm["primes"] for g in (1, 1 + p)],
              _check_thm53, {"ds": (3, 4), "primes": (2, 3)}),
    "isogeny": (lambda prm: [(k, prm["seed"], prm["max_rank"], prm["prime"]) for k in range(prm["samples"])],
                _check_isogeny, {"samples": 100, "max_rank": 6, "seed": 0, "prime": 2}),
    "monotony": (lambda prm: [(w, prm["seed"]) for w in classes_up_to(prm["max_rank"])],
                 _check_monotony, {"max_rank": 5, "seed": 0, "prime": 2}),
}

# extra fixed cases appended to the exhaustive sweeps
_EXTRA_CASES = {
    "sum_bound": [GOLDEN_TWO_CYCLE],
}


def _run_one(args):
    name, case, params = args
    check = SUITES[name][1]
    try:
        fails, counters = check(case, params)
    except (CrystalError, ValueError) as exc:
        fails, counters = [f"error: {exc}"], {}
    return case, fails, counters


def _case_json(name: str, case) -> dict:
    if name in ("traverso", "mainB", "sum_bound", "pair_symmetry", "duality", "cor52"):
        return _words_json(case)
    if name == "crosscheck":
        return {**_words_json(case[0]), "p": case[1]}
    if name == "monotony":
        return {**_words_json(case[0]), "seed": case[1]}
    if name == "thm53":
        return {"d": case[0], "p": case[1], "gamma": case[2]}
    if name == "isogeny":
        return {"sample": case[0], "seed": case[1], "max_rank": case[2], "p": case[3]}
    return {"case": repr(case)}


def run_suite(name: str, params: dict | None = None, jobs: int = 1) -> SuiteResult:
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; known: {', '.join(sorted(SUITES))}")
    make_cases, _, defaults = SUITES[name]
    prm = dict(defaults)
    prm.update({k: v for k, v in (params or {}).items() if v is not None})
    start = time.perf_counter()
    cases = list(make_cases(prm)) + _EXTRA_CASES.get(name, [])
    work = [(name, c, prm) for c in cases]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_one, work, chunksize=max(1, len(work) // (4 * jobs))))
    else:
        results = [_run_one(w) for w in work]
    failures, totals = [], Counter()
    for case, fails, counters in results:
        totals.update(counters)
        for reason in fails:
            failures.append({"case": _case_json(name, case), "reason": reason})
    seconds = time.perf_counter() - start
    return SuiteResult(name, prm, len(cases), failures, seconds, dict(totals))

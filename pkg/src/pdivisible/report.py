"""Invariant reports for permutation data and matrix crystals, plus their file formats.

Numbers are written as decimal strings and every numeric field is a pair
``{"value": ..., "engine": ...}`` where the engine is "perm", "matrix",
"both-agree" or, if the two engines differ, "disagree".
"""

from __future__ import annotations

import csv
import io
import json

from gmpy2 import mpq

from .exactnum.scalars import Q, format_rational, parse_rational
from .isocrystal import (
    CrystalError,
    FIsocrystal,
    alpha_beta_delta,
    classify,
    is_isoclinic,
    isoclinic_slope,
    make_splitting,
    manin_heights,
    new_isocrystal,
    quasi_special_period,
)
from .levelmod import level_torsion
from .permcrystal import (
    DatumError,
    PermutationDatum,
    cycle_isocrystal,
    cycle_stats,
    datum_alpha_beta,
    is_minimal,
    is_quasi_special,
    is_special,
    isomorphism_key,
    necklace_class,
    new_datum,
    perm_level_torsion,
    perm_manin_heights,
    to_isocrystal,
)

N_JUSTIFY_CYCLIC = "F-cyclic module: the isomorphism number equals the level torsion"
N_JUSTIFY_SMALL = "level torsion at most 2: the isomorphism number equals the level torsion"
N_JUSTIFY_ISOCLINIC_SUM = "direct sum of isoclinic Dieudonné modules: the isomorphism number equals the level torsion"


def s(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    return format_rational(x)


def tagged(value, engine: str) -> dict:
    return {"value": value, "engine": engine}


def agree(perm_value, matrix_value) -> dict:
    """Tag a value computed by both engines."""
    if perm_value == matrix_value:
        return tagged(perm_value, "both-agree")
    return {"value": perm_value, "engine": "disagree", "matrix_value": matrix_value}


# -------------------------------------------------------------- file formats ----

def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def datum_from_json(obj) -> PermutationDatum:
    if not isinstance(obj, dict) or set(obj) != {"r", "pi", "marked"}:
        raise DatumError("datum must be an object with keys r, pi, marked")
    try:
        r = int(obj["r"])
        pi = [int(x) for x in obj["pi"]]
        marked = [int(x) for x in obj["marked"]]
    except (TypeError, ValueError):
        raise DatumError("datum entries must be integers") from None
    if len(set(marked)) != len(marked):
        raise DatumError("marked indices repeat")
    return new_datum(r, pi, marked)


def crystal_to_json(f: FIsocrystal) -> dict:
    out = {
        "p": f.p,
        "rank": f.rank,
        "matrix": [[format_rational(x) for x in row] for row in f.matrix],
        "dieudonne": f.dieudonne,
    }
    if f.splitting is not None:
        out["splitting"] = [
            {"slope": format_rational(b.slope), "basis": [[format_rational(x) for x in v] for v in b.basis]}
            for b in f.splitting.blocks
        ]
    return out


def _rational(x):
    if isinstance(x, bool):
        raise CrystalError("booleans are not rationals")
    if isinstance(x, str):
        return parse_rational(x)
    if isinstance(x, int):
        return Q(x)
    raise CrystalError(f"rationals must be strings or integers, got {x!r}")


def crystal_from_json(obj) -> FIsocrystal:
    if not isinstance(obj, dict):
        raise CrystalError("crystal must be a JSON object")
    missing = {"p", "rank", "matrix", "dieudonne"} - set(obj)
    if missing:
        raise CrystalError(f"crystal is missing keys: {', '.join(sorted(missing))}")
    extra = set(obj) - {"p", "rank", "matrix", "dieudonne", "splitting"}
    if extra:
        raise CrystalError(f"unknown crystal keys: {', '.join(sorted(extra))}")
    try:
        matrix = [[_rational(x) for x in row] for row in obj["matrix"]]
        splitting = None
        if obj.get("splitting") is not None:
            splitting = make_splitting(
                (_rational(b["slope"]), [[_rational(x) for x in v] for v in b["basis"]]) for b in obj["splitting"]
            )
    except (TypeError, KeyError, ValueError) as exc:
        raise CrystalError(f"malformed crystal: {exc}") from None
    if int(obj["rank"]) != len(matrix):
        raise CrystalError("rank does not match the matrix size")
    f = new_isocrystal(int(obj["p"]), matrix, splitting)
    if bool(obj["dieudonne"]) != f.dieudonne:
        raise CrystalError(f"declared dieudonne={obj['dieudonne']} but the matrix gives {f.dieudonne}")
    return f


# ------------------------------------------------------------------ reports ----

def datum_report(datum: PermutationDatum, p: int = 2) -> dict:
    """All invariants of a permutation datum from both engines."""
    f = to_isocrystal(datum, p)
    prof = classify(f)
    rep_p = perm_level_torsion(datum, cross_check=True)
    rep_m = level_torsion(f)
    stats = cycle_stats(datum)
    manin_p = perm_manin_heights(datum)
    flags = list(rep_p.flags) + list(rep_m.flags)

    cycles = []
    for i, cs in enumerate(stats):
        g = cycle_isocrystal(datum, i, p)
        r2, d2 = cs.special_period
        mat_rows = [alpha_beta_delta(g, q) for q in range(1, r2 + 1)]
        mat_period = quasi_special_period(g)
        cycles.append({
            "support": tagged([s(x) for x in cs.support], "perm"),
            "r": tagged(s(cs.r), "perm"),
            "c": tagged(s(cs.c), "perm"),
            "d": tagged(s(cs.d), "perm"),
            "slope": agree(s(cs.slope), s(isoclinic_slope(g))),
            "special_period": agree([s(r2), s(d2)], [s(x) for x in mat_period] if mat_period else None),
            "alpha": agree([s(cs.alpha(q)) for q in range(1, r2 + 1)], [s(x[0]) for x in mat_rows]),
            "beta": agree([s(cs.beta(q)) for q in range(1, r2 + 1)], [s(x[1]) for x in mat_rows]),
            "delta": agree([s(cs.delta(q)) for q in range(1, r2 + 1)], [s(x[2]) for x in mat_rows]),
            "u": agree(s(manin_p[i][0]), s(manin_heights(g)[0])),
            "v": agree(s(manin_p[i][1]), s(manin_heights(g)[1])),
            "level_torsion": tagged(s(rep_p.pair_torsions[(i, i)]), "perm"),
        })

    window = datum.order
    table_p = [datum_alpha_beta(datum, q) for q in range(1, window + 1)]
    table_m = [alpha_beta_delta(f, q) for q in range(1, window + 1)]
    tables = {
        "window": tagged(s(window), "perm"),
        "alpha": agree([s(a) for a, _ in table_p], [s(x[0]) for x in table_m]),
        "beta": agree([s(b) for _, b in table_p], [s(x[1]) for x in table_m]),
        "delta": agree([s(b - a) for a, b in table_p], [s(x[2]) for x in table_m]),
    }

    minimal_p = is_minimal(datum)
    report = {
        "input": {"kind": "datum", "datum": datum.to_json()},
        "prime": s(p),
        "engines": ["perm", "matrix"],
        "c": agree(s(datum.c), s(prof.c)),
        "d": agree(s(datum.d), s(prof.d)),
        "slopes": agree(sorted((s(cs.slope) for cs in stats for _ in range(cs.r)), key=lambda x: Q(x)),
                        [s(x) for x in prof.slopes]),
        "cycles": cycles,
        "pair_torsions": [
            {"cycles": tagged([s(i), s(j)], "perm"), "level_torsion": tagged(s(v), "perm")}
            for (i, j), v in sorted(rep_p.pair_torsions.items())
        ],
        "alpha_beta_delta": tables,
        "level_torsion": agree(s(rep_p.level), s(rep_m.level)),
        "epsilon": agree(s(rep_p.epsilon), s(rep_m.epsilon)),
        "rule": agree(rep_p.rule, rep_m.rule),
        "n": {**agree(s(rep_p.level), s(rep_m.level)), "justification": N_JUSTIFY_CYCLIC},
        "minimal": agree(minimal_p, rep_m.level <= 1),
        "special": agree(is_special(datum), all(
            quasi_special_period(cycle_isocrystal(datum, i, p))[0] == cs.reduced[0]
            for i, cs in enumerate(stats))),
        "quasi_special": tagged(is_quasi_special(datum), "perm"),
        "necklace_class": tagged(list(necklace_class(datum)), "perm"),
        "isomorphism_key": tagged(list(isomorphism_key(datum)), "perm"),
        "flags": flags,
    }
    if len({cs.slope for cs in stats}) == 1:
        u_m, v_m = manin_heights(f)
        report["u"] = agree(s(max(u for u, _ in manin_p)), s(u_m))
        report["v"] = agree(s(max(v for _, v in manin_p)), s(v_m))
    return report


def crystal_report(f: FIsocrystal, window_override: int | None = None) -> dict:
    """Matrix-engine invariants of a crystal."""
    prof = classify(f)
    rep = level_torsion(f)
    flags = list(rep.flags)
    report = {
        "input": {"kind": "crystal", "crystal": crystal_to_json(f)},
        "prime": s(f.p),
        "engines": ["matrix"],
        "rank": tagged(s(f.rank), "matrix"),
        "c": tagged(s(prof.c) if prof.c is not None else None, "matrix"),
        "d": tagged(s(prof.d) if prof.d is not None else None, "matrix"),
        "slopes": tagged([s(x) for x in prof.slopes], "matrix"),
        "dieudonne": tagged(prof.dieudonne, "matrix"),
        "isoclinic": tagged(prof.isoclinic, "matrix"),
        "ordinary": tagged(prof.ordinary, "matrix"),
        "level_torsion": tagged(s(rep.level), "matrix"),
        "epsilon": tagged(s(rep.epsilon), "matrix"),
        "rule": tagged(rep.rule, "matrix"),
        "pair_torsions": [
            {"blocks": tagged([s(i), s(j)], "matrix"), "level_torsion": tagged(s(v), "matrix")}
            for (i, j), v in sorted(rep.pair_torsions.items())
        ],
        "flags": flags,
    }
    if f.dieudonne:
        report["minimal"] = tagged(rep.level <= 1, "matrix")
        if rep.level <= 2:
            report["n"] = {**tagged(s(rep.level), "matrix"), "justification": N_JUSTIFY_SMALL}
        elif rep.pair_torsions:
            report["n"] = {**tagged(s(rep.level), "matrix"), "justification": N_JUSTIFY_ISOCLINIC_SUM}
        else:
            report["n"] = {"value": None, "engine": "matrix", "upper_bound": s(rep.level)}
    if prof.isoclinic and f.rank:
        period = quasi_special_period(f)
        slope = isoclinic_slope(f)
        u, v = manin_heights(f)
        report["u"] = tagged(s(u), "matrix")
        report["v"] = tagged(s(v), "matrix")
        report["quasi_special"] = tagged(period is not None, "matrix")
        report["special"] = tagged(period is not None and period[0] == int(slope.denominator), "matrix")
        if period is not None:
            window, semantics = period[0], "certified"
        elif window_override:
            window, semantics = window_override, "lower-bound semantics"
            flags.append("lower-bound semantics")
        else:
            window, semantics = None, None
        if window:
            rows = [alpha_beta_delta(f, q) for q in range(1, window + 1)]
            report["alpha_beta_delta"] = {
                "window": tagged(s(window), "matrix"),
                "semantics": semantics,
                "alpha": tagged([s(x[0]) for x in rows], "matrix"),
                "beta": tagged([s(x[1]) for x in rows], "matrix"),
                "delta": tagged([s(x[2]) for x in rows], "matrix"),
            }
    return report


def has_disagreement(obj) -> bool:
    if isinstance(obj, dict):
        if obj.get("engine") == "disagree":
            return True
        return any(has_disagreement(v) for v in obj.values())
    if isinstance(obj, list):
        return any(has_disagreement(v) for v in obj)
    return False


# ------------------------------------------------------------ flat formats ----

def _leaf(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    return str(x)


def flatten(obj, prefix: str = "") -> list:
    """Rows (path, value, engine) for every leaf; tagged fields keep their engine."""
    rows = []
    if isinstance(obj, dict) and "value" in obj and "engine" in obj:
        value = obj["value"]
        if isinstance(value, list):
            rows.append((prefix, " ".join(_leaf(x) for x in value), obj["engine"]))
        else:
            rows.append((prefix, _leaf(value), obj["engine"]))
        for k, v in sorted(obj.items()):
            if k not in ("value", "engine"):
                rows += flatten(v, f"{prefix}.{k}")
        return rows
    if isinstance(obj, dict):
        for k, v in sorted(obj.items()):
            rows += flatten(v, f"{prefix}.{k}" if prefix else k)
        return rows
    if isinstance(obj, list):
        if all(not isinstance(v, (dict, list)) for v in obj):
            rows.append((prefix, " ".join(_leaf(x) for x in obj), ""))
            return rows
        for i, v in enumerate(obj):
            rows += flatten(v, f"{prefix}[{i}]")
        return rows
    rows.append((prefix, _leaf(obj), ""))
    return rows


def to_csv(obj) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["field", "value", "engine"])
    writer.writerows(flatten(obj))
    return buf.getvalue()


def to_table(obj) -> str:
    rows = flatten(obj)
    width = max((len(r[0]) for r in rows), default=0)
    return "".join(f"{path.ljust(width)}  {value}{'  [' + engine + ']' if engine else ''}\n"
                   for path, value, engine in rows)


def render(obj, fmt: str) -> str:
    if fmt == "json":
        return dumps(obj)
    if fmt == "csv":
        return to_csv(obj)
    return to_table(obj)


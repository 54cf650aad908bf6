import itertools
from collections import defaultdict

import pytest

from pdivisible.permcrystal import necklace_class, new_datum
from pdivisible.verify import (
    SUITES,
    class_words,
    classes_up_to,
    enumerate_classes,
    necklaces,
    run_suite,
)


def brute_force_classes(max_rank):
    """Necklace classes of every (pi, S) with r <= max_rank, keyed by (c, d)."""
    out = defaultdict(set)
    for r in range(1, max_rank + 1):
        for pi in itertools.permutations(range(1, r + 1)):
            for mask in range(2 ** r):
                marked = [s for s in range(1, r + 1) if mask >> (s - 1) & 1]
                out[(r - len(marked), len(marked))].add(necklace_class(new_datum(r, pi, marked)))
    return out


def test_small_counts():
    assert len(enumerate_classes(0, 1)) == 1
    assert len(enumerate_classes(1, 1)) == 2
    assert len(enumerate_classes(2, 1)) == 4


def test_necklaces_are_canonical():
    assert necklaces(4, 2) == ("0011", "0101")
    assert len(necklaces(6, 3)) == 4


def test_counts_match_brute_force():
    brute = brute_force_classes(5)
    for (c, d), classes in brute.items():
        enumerated = {necklace_class(x) for x in enumerate_classes(c, d)}
        assert len(enumerate_classes(c, d)) == len(enumerated) == len(classes)
        assert enumerated == classes
    assert sum(len(v) for v in brute.values()) == len(classes_up_to(5))


def test_class_words_total():
    for words in class_words(3, 2):
        assert sum(map(len, words)) == 5
        assert sum(w.count("1") for w in words) == 2


@pytest.mark.parametrize("name,params", [
    ("traverso", {"max_rank": 7}),
    ("mainB", {"max_rank": 7}),
    ("sum_bound", {"max_rank": 7}),
    ("pair_symmetry", {"max_rank": 6}),
    ("duality", {"max_rank": 6}),
    ("crosscheck", {"max_rank": 5, "primes": (2, 3, 5)}),
    ("cor52", {"max_rank": 7}),
    ("thm53", {}),
    ("isogeny", {"samples": 30, "max_rank": 4, "seed": 3}),
    ("monotony", {"max_rank": 4}),
])
def test_suites_pass(name, params):
    result = run_suite(name, params)
    assert result.cases > 0
    assert result.failures == []
    assert result.ok


def test_sum_bound_equality_case():
    result = run_suite("sum_bound", {"max_rank": 4})
    assert int(result.details["golden_equality"]) == 1


def test_parallel_results_are_identical():
    for name, params in [("traverso", {"max_rank": 6}), ("isogeny", {"samples": 12, "max_rank": 4})]:
        one = run_suite(name, params, jobs=1).to_json(timing=False)
        two = run_suite(name, params, jobs=2).to_json(timing=False)
        assert one == two


def test_suites_are_deterministic():
    a = run_suite("isogeny", {"samples": 15, "max_rank": 4, "seed": 11}).to_json(timing=False)
    b = run_suite("isogeny", {"samples": 15, "max_rank": 4, "seed": 11}).to_json(timing=False)
    assert a == b


def test_unknown_suite():
    with pytest.raises(KeyError):
        run_suite("nope")


def test_suite_csv_columns():
    result = run_suite("traverso", {"max_rank": 3})
    header, row = result.to_csv().splitlines()
    assert header == "suite,params,cases,failures,seconds"
    assert row.startswith("traverso,max_rank=3,")


def test_suite_registry():
    assert set(SUITES) == {"traverso", "mainB", "sum_bound", "pair_symmetry", "duality",
                           "crosscheck", "cor52", "thm53", "isogeny", "monotony"}

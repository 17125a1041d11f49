import json
import re
from fractions import Fraction
from importlib import resources

import jsonschema
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gecsynth.errors import LengthMismatch
from gecsynth.evaluate import (
    CategoryCount, ScoreReport, bootstrap_dict, category_recall_table, compare, f_score,
    paired_bootstrap, report_json, score,
)
from gecsynth.m2 import Edit, M2Record, parse_m2
from gecsynth.text import TokenSequence
from oracles import exhaustive_p_value, f_half_exact

COUNT = st.integers(0, 60)
TRIPLES = st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3), st.integers(0, 3)), min_size=1, max_size=4)


def schema(name):
    return json.loads(resources.files("gecsynth").joinpath("data", name).read_text("utf-8"))


def rec(src, *annotators):
    return M2Record(TokenSequence.from_tokens(src.split()),
                    {a: tuple(Edit(*e, annotator=a) for e in edits) for a, edits in enumerate(annotators)})


@given(COUNT, COUNT, COUNT)
def test_f_half_matches_exact_fraction(tp, fp, fn):
    r = ScoreReport(tp, fp, fn)
    assert r.f_half == pytest.approx(float(f_half_exact(tp, fp, fn)), abs=1e-12)
    assert 0.0 <= r.f_half <= 1.0


@given(COUNT, COUNT, COUNT)
def test_f_half_monotone_in_tp(tp, fp, fn):
    assert ScoreReport(tp + 1, fp, fn).f_half >= ScoreReport(tp, fp, fn).f_half


@given(st.floats(0, 1))
def test_f_equals_p_when_p_equals_r(p):
    assert f_score(p, p) == pytest.approx(p)


def test_empty_counts_are_perfect():
    r = ScoreReport(0, 0, 0)
    assert (r.precision, r.recall, r.f_half) == (1.0, 1.0, 1.0)
    assert ScoreReport(0, 3, 0).f_half == 0.0


def test_f_score_weights_precision():
    assert f_score(0.8, 0.4) > f_score(0.4, 0.8)
    assert float(Fraction(5, 4) * Fraction(1, 2) * Fraction(1, 4) / (Fraction(1, 8) + Fraction(1, 4))) \
        == pytest.approx(f_score(0.5, 0.25))


reports = st.builds(
    ScoreReport, COUNT, COUNT, COUNT,
    st.dictionaries(st.sampled_from(["R:SPELL", "M:PUNCT"]),
                    st.builds(lambda m, e: CategoryCount(m, m + e), COUNT, COUNT), max_size=2),
)


@given(reports, reports, reports)
def test_merge_associative(a, b, c):
    x, y = a.merge(b).merge(c), a.merge(b.merge(c))
    assert (x.tp, x.fp, x.fn, x.per_category) == (y.tp, y.fp, y.fn, y.per_category)


@given(reports, reports)
def test_merge_commutative_on_counts(a, b):
    x, y = a.merge(b), b.merge(a)
    assert (x.tp, x.fp, x.fn, x.per_category) == (y.tp, y.fp, y.fn, y.per_category)


def test_perfect_hypothesis():
    gold = parse_m2("S He go to scool\nA 1 2|||R:VERB:FORM|||goes|||REQUIRED|||-NONE-|||0\n"
                    "A 3 4|||R:SPELL|||school|||REQUIRED|||-NONE-|||0\n\n")
    r = score(gold, ["He goes to school"])
    assert (r.tp, r.fp, r.fn) == (2, 0, 0)
    r = score(gold, ["He go to scool"])
    assert (r.tp, r.fp, r.fn, r.f_half) == (0, 0, 2, 0.0)


def test_match_needs_same_correction():
    gold = [rec("a b c", [(1, 2, "x", "R:X")])]
    r = score(gold, ["a y c"])
    assert (r.tp, r.fp, r.fn) == (0, 1, 1)


def test_best_annotator_chosen():
    one = [rec("a b c", [(1, 2, "x", "R:X")])]
    two = [rec("a b c", [(1, 2, "x", "R:X")], [(1, 2, "y", "R:X")])]
    assert score(two, ["a y c"]).f_half == 1.0 > score(one, ["a y c"]).f_half


@given(st.sampled_from(["a b c", "a x c", "a y c", "z b c", "a b"]))
def test_extra_annotator_never_hurts(hyp):
    one = [rec("a b c", [(1, 2, "x", "R:X")])]
    two = [rec("a b c", [(1, 2, "x", "R:X")], [(1, 2, "y", "R:X"), (0, 1, "z", "R:X")])]
    assert score(two, [hyp]).f_half >= score(one, [hyp]).f_half


def test_tie_goes_to_lowest_annotator():
    # both annotators give F=0; annotator 0's edits define the category totals
    gold = [rec("a b c", [(1, 2, "x", "R:FIRST")], [(1, 2, "y", "R:SECOND")])]
    r = score(gold, ["a q c"])
    assert set(r.per_category) == {"R:FIRST"}


def test_cumulative_annotator_differs_from_local():
    words = [f"w{i}" for i in range(22)]
    src = " ".join(words)
    # sentence 0: one true edit and ten false ones leave the running total precision-poor
    hyp0 = " ".join(f"v{i}" if i % 2 == 0 and i <= 20 else w for i, w in enumerate(words))
    first = rec(src, [(0, 1, "v0", "R:X")])
    # sentence 1: annotator 0 gives (1, 1, 0), annotator 1 gives (2, 0, 9)
    hyp1 = " ".join({0: "x", 2: "y"}.get(i, w) for i, w in enumerate(words))
    ann1 = [(0, 1, "x", "R:X"), (2, 3, "y", "R:X")] + [(i, i + 1, "z", "R:X") for i in range(4, 21, 2)]
    second = rec(src, [(0, 1, "x", "R:X")], ann1)
    gold = [first, second]
    local = score(gold, [hyp0, hyp1])
    cum = score(gold, [hyp0, hyp1], cumulative_annotator=True)
    assert local.per_sentence == [(1, 10, 0), (1, 1, 0)]
    assert cum.per_sentence == [(1, 10, 0), (2, 0, 9)]
    assert cum.f_half > local.f_half


def test_category_recall_table():
    gold = [rec("a b c d", [(0, 1, "A", "R:CASE"), (2, 3, "x", "R:SPELL")]),
            rec("e f", [(0, 1, "E", "R:CASE")])]
    r = score(gold, ["A b c d", "e f"])
    table = category_recall_table(r)
    assert table == [("R:CASE", 1, 2, 0.5), ("R:SPELL", 0, 1, 0.0)]


def test_length_mismatch():
    with pytest.raises(LengthMismatch):
        score([rec("a", [])], [])
    with pytest.raises(LengthMismatch):
        paired_bootstrap([(1, 0, 0)], [(1, 0, 0), (0, 1, 0)])


def test_report_json_format_and_schema():
    gold = [rec("a b c", [(1, 2, "x", "R:X")]), rec("d", [])]
    text = report_json(score(gold, ["a x c", "d e f g h"]))
    doc = json.loads(text)
    jsonschema.validate(doc, schema("report.schema.json"))
    for key in ("precision", "recall", "f05"):
        assert re.search(rf'"{key}": \d\.\d{{4}}[,\n]', text)
    assert doc["counts"] == {"tp": 1, "fp": 1, "fn": 0}
    assert doc["diagnostics"] and doc["diagnostics"][0]["flag"] == "HALL-SUSPECT"


def test_bootstrap_identical_systems():
    r = paired_bootstrap([(1, 0, 1)] * 5, [(1, 0, 1)] * 5, samples=100)
    assert r.p_value == 1.0 and not r.significant


@given(TRIPLES, TRIPLES)
def test_exhaustive_bootstrap_matches_oracle(a, b):
    n = min(len(a), len(b))
    a, b = a[:n], b[:n]
    got = paired_bootstrap(a, b, exhaustive=True).p_value
    assert got == pytest.approx(float(exhaustive_p_value(a, b)), abs=1e-12)


@given(TRIPLES, TRIPLES, st.integers(0, 5))
def test_bootstrap_p_in_range_and_deterministic(a, b, seed):
    n = min(len(a), len(b))
    r1 = paired_bootstrap(a[:n], b[:n], samples=200, seed=seed)
    r2 = paired_bootstrap(a[:n], b[:n], samples=200, seed=seed)
    assert 0.0 <= r1.p_value <= 1.0 and r1 == r2


def test_clear_winner_is_significant():
    a = [(2, 0, 0)] * 30
    b = [(0, 2, 2)] * 30
    r = paired_bootstrap(a, b, samples=500)
    assert r.p_value == 0.0 and r.significant and r.delta_f_half == 1.0
    assert set(bootstrap_dict(r)) == {"p_value", "samples", "significant", "delta_f05", "alpha"}


def test_compare_end_to_end():
    gold = [rec("a b", [(0, 1, "x", "R:X")]) for _ in range(6)]
    r = compare(gold, ["x b"] * 6, ["a b"] * 6, samples=300)
    assert r.significant
    with pytest.raises(LengthMismatch):
        compare(gold, ["x b"] * 6, ["a b"] * 5)

"""MaxMatch-style scoring, per-category recall and paired bootstrap tests."""
from __future__ import annotations

import itertools
import json
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .align import Lexicon, extract_edits, flag_suspect_edit
from .errors import LengthMismatch
from .m2 import M2Record
from .rng import resample_generator
from .text import TokenSequence, tokenize

BETA = 0.5


def _prf(tp: int, fp: int, fn: int, beta: float = BETA) -> tuple[Fraction, Fraction, Fraction]:
    p = Fraction(tp, tp + fp) if tp + fp else Fraction(1)
    r = Fraction(tp, tp + fn) if tp + fn else Fraction(1)
    b2 = Fraction(beta) ** 2
    denom = b2 * p + r
    f = (1 + b2) * p * r / denom if denom else Fraction(0)
    return p, r, f


def f_score(precision: float, recall: float, beta: float = BETA) -> float:
    b2 = beta * beta
    denom = b2 * precision + recall
    return (1 + b2) * precision * recall / denom if denom else 0.0


@dataclass(frozen=True)
class CategoryCount:
    matched: int
    total: int

    @property
    def recall(self) -> float:
        return self.matched / self.total if self.total else 1.0


@dataclass
class ScoreReport:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    per_category: dict[str, CategoryCount] = field(default_factory=dict)
    per_sentence: list[tuple[int, int, int]] = field(default_factory=list)
    diagnostics: list[dict] = field(default_factory=list)

    @classmethod
    def from_counts(cls, tp: int, fp: int, fn: int) -> "ScoreReport":
        return cls(tp, fp, fn, per_sentence=[(tp, fp, fn)])

    @property
    def precision(self) -> float:
        return float(_prf(self.tp, self.fp, self.fn)[0])

    @property
    def recall(self) -> float:
        return float(_prf(self.tp, self.fp, self.fn)[1])

    @property
    def f_half(self) -> float:
        return float(_prf(self.tp, self.fp, self.fn)[2])

    def merge(self, other: "ScoreReport") -> "ScoreReport":
        cats = dict(self.per_category)
        for k, c in other.per_category.items():
            old = cats.get(k, CategoryCount(0, 0))
            cats[k] = CategoryCount(old.matched + c.matched, old.total + c.total)
        return ScoreReport(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn, cats,
                           self.per_sentence + other.per_sentence,
                           self.diagnostics + other.diagnostics)

    def to_json(self) -> str:
        return report_json(self)


@dataclass(frozen=True)
class BootstrapResult:
    p_value: float
    samples: int
    significant: bool
    delta_f_half: float
    alpha: float = 0.05


def _prepare(record: M2Record, hyp: str | TokenSequence, lex: Lexicon | None):
    hyp_tokens = hyp if isinstance(hyp, TokenSequence) else tokenize(hyp)
    hyp_edits = extract_edits(record.source, hyp_tokens, lex)
    gold = [(a, {e.key: e.category for e in edits}) for a, edits in record.annotations.items()]
    return hyp_edits, gold


def _counts(hyp_keys: set, gold: dict) -> tuple[int, int, int]:
    tp = len(hyp_keys & gold.keys())
    return tp, len(hyp_keys) - tp, len(gold) - tp


def score(gold: Sequence[M2Record], hyp: Sequence[str | TokenSequence],
          lex: Lexicon | None = None, cumulative_annotator: bool = False) -> ScoreReport:
    """Score hypothesis sentences against gold M2 records.

    Hypothesis edits are extracted against each gold source and matched on
    (start, end, correction). Per sentence the annotator with the best local
    F0.5 is used (lowest id on ties). With ``cumulative_annotator`` the choice
    instead maximises the running corpus F0.5, as the reference scorer does.
    """
    if len(gold) != len(hyp):
        raise LengthMismatch(f"{len(gold)} gold records but {len(hyp)} hypotheses")
    tp = fp = fn = 0
    cats: Counter = Counter()
    matched: Counter = Counter()
    per_sentence = []
    diagnostics = []
    for idx, (record, h) in enumerate(zip(gold, hyp)):
        hyp_edits, annotators = _prepare(record, h, lex)
        hyp_keys = {e.key for e in hyp_edits}
        best = None
        for a, gmap in annotators:
            c = _counts(hyp_keys, gmap)
            if cumulative_annotator:
                rank = _prf(tp + c[0], fp + c[1], fn + c[2])[2]
            else:
                rank = _prf(*c)[2]
            if best is None or rank > best[0]:
                best = (rank, a, gmap, c)
        _, a, gmap, c = best
        tp += c[0]
        fp += c[1]
        fn += c[2]
        per_sentence.append(c)
        for key, cat in gmap.items():
            cats[cat] += 1
            if key in hyp_keys:
                matched[cat] += 1
        for e in hyp_edits:
            flag = flag_suspect_edit(record.source, e)
            if flag:
                diagnostics.append({"sentence": idx, "start": e.start, "end": e.end,
                                    "correction": e.correction, "flag": flag})
    per_category = {k: CategoryCount(matched[k], n) for k, n in cats.items()}
    return ScoreReport(tp, fp, fn, per_category, per_sentence, diagnostics)


def category_recall_table(report: ScoreReport) -> list[tuple[str, int, int, float]]:
    rows = [(k, c.matched, c.total, c.recall) for k, c in report.per_category.items()]
    rows.sort(key=lambda r: (-r[2], r[0]))
    return rows


def _f_half_vec(tp, fp, fn):
    # F0.5 = 5tp / (5tp + 4fp + fn) for tp > 0: one rounding per value, so
    # rationally equal scores compare equal as floats
    tp, fp, fn = (np.asarray(x, dtype=np.int64) for x in (tp, fp, fn))
    den = 5 * tp + 4 * fp + fn
    with np.errstate(invalid="ignore", divide="ignore"):
        f = np.where(tp > 0, (5 * tp) / np.where(den > 0, den, 1), 0.0)
    return np.where(den == 0, 1.0, f)


def _triples(report_or_counts) -> np.ndarray:
    if isinstance(report_or_counts, ScoreReport):
        report_or_counts = report_or_counts.per_sentence
    arr = np.asarray(report_or_counts, dtype=np.int64).reshape(-1, 3)
    return arr


def _all_resamples(n, batch):
    it = itertools.product(range(n), repeat=n)
    while True:
        chunk = list(itertools.islice(it, batch))
        if not chunk:
            return
        yield np.array(chunk, dtype=np.int64)


def _random_resamples(n, samples, seed, batch):
    for lo in range(0, samples, batch):
        hi = min(samples, lo + batch)
        yield np.stack([resample_generator(seed, i).integers(0, n, n) for i in range(lo, hi)])


def paired_bootstrap(counts_a, counts_b, samples: int = 10_000, alpha: float = 0.05,
                     seed: int = 0, exhaustive: bool = False, batch: int = 512) -> BootstrapResult:
    """Paired bootstrap over per-sentence (tp, fp, fn) triples.

    Resample ``i`` draws its sentence indices from a generator keyed by
    ``(seed, i)``. The p-value is the share of resamples in which the system
    with the higher observed F0.5 does not come out strictly ahead; with no
    observed difference it is 1.0. ``exhaustive`` replaces random resampling
    by all n**n ordered index tuples.
    """
    A, B = _triples(counts_a), _triples(counts_b)
    if A.shape != B.shape:
        raise LengthMismatch(f"{len(A)} vs {len(B)} sentences")
    if samples < 1:
        raise ValueError("samples must be >= 1")
    n = len(A)
    fa = _f_half_vec(*A.sum(axis=0)) if n else 0.0
    fb = _f_half_vec(*B.sum(axis=0)) if n else 0.0
    delta = float(fa - fb)
    if n == 0 or delta == 0.0:
        total = n ** n if exhaustive and n else samples
        return BootstrapResult(1.0, total, False, delta, alpha)
    sign = 1.0 if delta > 0 else -1.0
    losses = 0
    total = 0
    if exhaustive:
        if n > 8:
            raise ValueError("exhaustive enumeration limited to 8 sentences")
        rows_source = _all_resamples(n, batch)
    else:
        rows_source = _random_resamples(n, samples, seed, batch)
    for rows in rows_source:
        mult = np.zeros((len(rows), n), dtype=np.int64)
        np.add.at(mult, (np.repeat(np.arange(len(rows)), rows.shape[1]), rows.ravel()), 1)
        sa = mult @ A
        sb = mult @ B
        d = (_f_half_vec(sa[:, 0], sa[:, 1], sa[:, 2]) - _f_half_vec(sb[:, 0], sb[:, 1], sb[:, 2])) * sign
        losses += int(np.count_nonzero(d <= 0))
        total += len(rows)
    p = losses / total
    return BootstrapResult(p, total, p < alpha, delta, alpha)


def compare(gold: Sequence[M2Record], hyp_a: Sequence[str], hyp_b: Sequence[str],
            samples: int = 10_000, alpha: float = 0.05, seed: int = 0,
            lex: Lexicon | None = None, exhaustive: bool = False) -> BootstrapResult:
    if not (len(gold) == len(hyp_a) == len(hyp_b)):
        raise LengthMismatch(f"gold={len(gold)} hyp_a={len(hyp_a)} hyp_b={len(hyp_b)}")
    ra = score(gold, hyp_a, lex)
    rb = score(gold, hyp_b, lex)
    return paired_bootstrap(ra.per_sentence, rb.per_sentence, samples, alpha, seed, exhaustive)


def _fmt(x: float) -> str:
    return f"{x:.4f}"


def report_dict(report: ScoreReport) -> dict:
    return {
        "counts": {"tp": report.tp, "fp": report.fp, "fn": report.fn},
        "precision": report.precision,
        "recall": report.recall,
        "f05": report.f_half,
        "categories": [
            {"category": k, "matched": m, "total": t, "recall": r}
            for k, m, t, r in category_recall_table(report)
        ],
        "sentences": [{"tp": a, "fp": b, "fn": c} for a, b, c in report.per_sentence],
        "diagnostics": report.diagnostics,
    }


def dumps_fixed(obj, indent: int | None = 2) -> str:
    """JSON with every float written to 4 decimal places."""
    floats: list[float] = []

    def walk(o):
        if isinstance(o, float):
            floats.append(o)
            return f"\x00F{len(floats) - 1}\x00"
        if isinstance(o, dict):
            return {k: walk(v) for k, v in o.items()}
        if isinstance(o, (list, tuple)):
            return [walk(v) for v in o]
        return o

    text = json.dumps(walk(obj), indent=indent, ensure_ascii=False)
    for i, x in enumerate(floats):
        text = text.replace(f'"\\u0000F{i}\\u0000"', _fmt(x), 1)
    return text


def report_json(report: ScoreReport) -> str:
    return dumps_fixed(report_dict(report)) + "\n"


def bootstrap_dict(result: BootstrapResult) -> dict:
    return {"p_value": result.p_value, "samples": result.samples,
            "significant": result.significant, "delta_f05": result.delta_f_half,
            "alpha": result.alpha}

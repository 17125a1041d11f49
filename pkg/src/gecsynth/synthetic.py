"""Synthetic corpora with known error structure, for experiments and tests.

The vocabulary is a fixed list of lowercase words. Sentences are generated
clauses joined by commas and closed with a full stop, so every sentence has
spelling sites and comma sites. Gold corpora are built edit by edit in
source coordinates, so their categories are known without running the
classifier.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field

from .align import Lexicon
from .m2 import Edit, M2Record
from .rng import stream_rng
from .text import TokenSequence, char_distance

VOCAB = (
    "maja", "kool", "linn", "mets", "raamat", "laud", "aken", "uks", "tee", "jogi",
    "koer", "kass", "lind", "puu", "lill", "auto", "buss", "rong", "laev", "tool",
    "sober", "ema", "isa", "laps", "opetaja", "arst", "kokk", "poiss", "tudruk", "vanaema",
    "loeb", "kirjutab", "jookseb", "laulab", "naerab", "ootab", "vaatab", "kuulab", "tuleb", "laheb",
    "ilus", "suur", "vaike", "uus", "vana", "kiire", "aeglane", "hea", "halb", "soe",
)

DEFAULT_MIX = {"R:SPELL": 0.5, "M:PUNCT": 0.3, "U:PUNCT": 0.2}


def lexicon(vocab=VOCAB) -> Lexicon:
    return Lexicon.from_words(vocab)


def clean_tokens(rng: random.Random, vocab=VOCAB, clauses=(2, 4), clause_len=(2, 5)) -> list[str]:
    out: list[str] = []
    for c in range(rng.randint(*clauses)):
        if c:
            out.append(",")
        for _ in range(rng.randint(*clause_len)):
            # no immediate repeats: they make gold alignments ambiguous
            out.append(rng.choice([w for w in vocab if not out or w != out[-1]]))
    out.append(".")
    return out


def clean_corpus(n: int, seed: int = 0, vocab=VOCAB, clauses=(3, 5)) -> list[str]:
    """``n`` clean sentences, one string each, in tokenizer layout."""
    lines = []
    for i in range(n):
        toks = clean_tokens(stream_rng(seed, "synthetic-clean", i), vocab, clauses=clauses)
        lines.append(_render(toks))
    return lines


def _render(toks) -> str:
    return TokenSequence(tuple(toks)).text()


def misspell(word: str, rng: random.Random, vocab=VOCAB) -> str:
    """A non-vocabulary form at character distance 1 or 2 from ``word``."""
    words = set(vocab)
    letters = "abdeghijklmnoprstuv"
    for _ in range(100):
        w = word
        for _ in range(rng.choice((1, 1, 2))):
            i = rng.randrange(len(w))
            op = rng.randrange(3)
            if op == 0:
                w = w[:i] + rng.choice(letters) + w[i + 1:]
            elif op == 1 and len(w) > 2:
                w = w[:i] + w[i + 1:]
            else:
                w = w[:i] + rng.choice(letters) + w[i:]
        if w not in words and 1 <= char_distance(w, word) <= 2:
            return w
    raise ValueError(f"could not misspell {word!r}")


@dataclass
class GoldCorpus:
    records: list[M2Record]
    clean: list[str]
    category_counts: dict[str, int] = field(default_factory=dict)


def gold_corpus(n: int, seed: int = 0, mix: dict[str, float] | None = None,
                edits_per_sentence=(1, 2, 3), vocab=VOCAB) -> GoldCorpus:
    """Gold M2 records whose edit categories follow ``mix`` exactly (up to rounding).

    Any two edits are at least two untouched tokens apart. Each record's correction is the
    clean sentence returned alongside it.
    """
    mix = mix or DEFAULT_MIX
    rng = stream_rng(seed, "synthetic-gold", 0)
    ks = [rng.choice(edits_per_sentence) for _ in range(n)]
    total = sum(ks)
    cats: list[str] = []
    for c, w in mix.items():
        cats.extend([c] * round(w * total))
    while len(cats) < total:
        cats.append(max(mix, key=mix.get))
    cats = cats[:total]
    rng.shuffle(cats)

    records, clean, counts = [], [], {}
    pos = 0
    for i, k in enumerate(ks):
        srng = stream_rng(seed, "synthetic-gold", i + 1)
        toks = clean_tokens(srng, vocab, clauses=(3, 4))
        want = cats[pos:pos + k]
        pos += k
        src, edits = _inject(toks, want, srng, vocab)
        for e in edits:
            counts[e.category] = counts.get(e.category, 0) + 1
        records.append(M2Record(TokenSequence.from_tokens(src), {0: tuple(edits)}))
        clean.append(_render(toks))
    return GoldCorpus(records, clean, counts)


def _inject(toks: list[str], cats: list[str], rng: random.Random, vocab) -> tuple[list[str], list[Edit]]:
    """Turn clean tokens into a learner sentence with one edit per category."""
    n = len(toks)
    # at least two untouched tokens between edits, so no cheaper alignment
    # (e.g. a swap) can span two of them
    blocked: set[int] = set()
    plan: dict[int, tuple[str, str]] = {}  # clean pos -> (category, misspelling)
    gaps: set[int] = set()  # U:PUNCT: extra comma before clean token g
    for cat in cats:
        if cat == "R:SPELL":
            sites = [i for i in range(n) if toks[i].isalpha() and i not in blocked]
        elif cat == "M:PUNCT":
            sites = [i for i in range(n) if toks[i] == "," and i not in blocked]
        else:
            # not beside an existing comma, where the deleted one would be ambiguous
            sites = [g for g in range(1, n) if g not in blocked and g - 1 not in blocked
                     and "," not in (toks[g - 1], toks[g])]
        if not sites:
            continue
        i = rng.choice(sites)
        if cat == "U:PUNCT":
            gaps.add(i)
            blocked.update(range(i - 2, i + 2))
        else:
            plan[i] = (cat, misspell(toks[i], rng, vocab) if cat == "R:SPELL" else "")
            blocked.update(range(i - 2, i + 3))

    src: list[str] = []
    edits: list[Edit] = []
    for i, tok in enumerate(toks):
        if i in gaps:
            edits.append(Edit(len(src), len(src) + 1, "", "U:PUNCT"))
            src.append(",")
        if i in plan:
            cat, form = plan[i]
            if cat == "R:SPELL":
                edits.append(Edit(len(src), len(src) + 1, tok, cat))
                src.append(form)
            else:
                edits.append(Edit(len(src), len(src), tok, cat))
            continue
        src.append(tok)
    return src, edits

"""How closely a learned channel reproduces the error mix it was fitted on."""
from __future__ import annotations

import sys
import time
from collections import Counter
from dataclasses import dataclass

from _config import emit, parse_config

from gecsynth.align import extract_edits
from gecsynth.channel import corrupt_sentence, fit_channel
from gecsynth.synthetic import clean_corpus, gold_corpus, lexicon
from gecsynth.text import tokenize


@dataclass
class Config:
    gold_sentences: int = 3000
    clean_sentences: int = 20_000
    spell: float = 0.5
    missing_comma: float = 0.3
    extra_comma: float = 0.2
    min_count: int = 1
    seed: int = 7


def run(cfg: Config) -> list[dict]:
    mix = {"R:SPELL": cfg.spell, "M:PUNCT": cfg.missing_comma, "U:PUNCT": cfg.extra_comma}
    t0 = time.perf_counter()
    model = fit_channel(gold_corpus(cfg.gold_sentences, seed=cfg.seed, mix=mix).records, cfg.min_count)
    lex = lexicon()
    applied, recovered = Counter(), Counter()
    for i, line in enumerate(clean_corpus(cfg.clean_sentences, seed=cfg.seed + 1)):
        clean = tokenize(line)
        res = corrupt_sentence(clean, model, cfg.seed + 2, i)
        want = Counter(res.applied)
        got = Counter(e.category for e in extract_edits(res.tokens, clean, lex))
        applied.update(want)
        recovered.update(got & want)
    total = sum(applied.values())
    rows = []
    for cat, fitted in model.category_dist.items():
        rows.append({
            "category": cat,
            "target": f"{mix.get(cat, 0.0):.3f}",
            "fitted": f"{fitted:.3f}",
            "applied": f"{applied[cat] / total:.3f}",
            "recovered": f"{recovered[cat] / applied[cat]:.3f}" if applied[cat] else "-",
        })
    rows.append({"category": "all", "target": "1.000", "fitted": "1.000", "applied": "1.000",
                 "recovered": f"{sum(recovered.values()) / total:.3f}"})
    print(f"# {time.perf_counter() - t0:.1f}s", file=sys.stderr)
    return rows


if __name__ == "__main__":
    cfg, as_json = parse_config(Config, __doc__)
    emit(run(cfg), as_json)

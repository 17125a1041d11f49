"""Measured perturbation rate of the probabilistic channel across p_word settings."""
from __future__ import annotations

import time
from collections import Counter
from dataclasses import dataclass, field

from _config import emit, parse_config

from gecsynth.prob import NoiseConfig, build_confusion_index, noise_sentence
from gecsynth.synthetic import VOCAB, clean_corpus
from gecsynth.text import tokenize


@dataclass
class Config:
    """Sweep p_word over synthetic clean text and report the observed token rate."""
    sentences: int = 5000
    p_words: list = field(default_factory=lambda: [0.05, 0.1, 0.15, 0.2, 0.3])
    p_char: float = 0.0
    seed: int = 1


def run(cfg: Config) -> list[dict]:
    idx = build_confusion_index(VOCAB)
    sents = [tokenize(x) for x in clean_corpus(cfg.sentences, seed=cfg.seed)]
    rows = []
    for p in cfg.p_words:
        stats = Counter()
        nc = NoiseConfig(p_word=float(p), p_char=cfg.p_char, seed=cfg.seed)
        t0 = time.perf_counter()
        for i, s in enumerate(sents):
            noise_sentence(s, nc, idx, i, stats=stats)
        ops = {k: v for k, v in stats.items() if k not in ("tokens", "perturbed")}
        rows.append({
            "p_word": p,
            "tokens": stats["tokens"],
            "rate": f"{stats['perturbed'] / stats['tokens']:.4f}",
            "top_op": max(ops, key=ops.get) if ops else "-",
            "seconds": f"{time.perf_counter() - t0:.2f}",
        })
    return rows


if __name__ == "__main__":
    cfg, as_json = parse_config(Config)
    emit(run(cfg), as_json)

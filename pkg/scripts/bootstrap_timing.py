"""Wall time and p-value of the paired bootstrap for growing test sets."""
from __future__ import annotations

import random
import time
from dataclasses import dataclass, field

from _config import emit, parse_config

from gecsynth.evaluate import paired_bootstrap


@dataclass
class Config:
    """Two simulated systems; B finds each gold edit slightly less often than A."""
    sizes: list = field(default_factory=lambda: [100, 500, 2000, 5000])
    samples: int = 10_000
    edits_per_sentence: int = 2
    recall_a: float = 0.45
    recall_b: float = 0.40
    false_positive_rate: float = 0.3
    seed: int = 0


def simulate(n: int, recall: float, cfg: Config, rng: random.Random):
    rows = []
    for _ in range(n):
        tp = sum(rng.random() < recall for _ in range(cfg.edits_per_sentence))
        fp = sum(rng.random() < cfg.false_positive_rate for _ in range(2))
        rows.append((tp, fp, cfg.edits_per_sentence - tp))
    return rows


def run(cfg: Config) -> list[dict]:
    out = []
    for n in cfg.sizes:
        rng = random.Random(cfg.seed * 1_000_003 + n)
        a, b = simulate(n, cfg.recall_a, cfg, rng), simulate(n, cfg.recall_b, cfg, rng)
        t0 = time.perf_counter()
        res = paired_bootstrap(a, b, samples=cfg.samples, seed=cfg.seed)
        out.append({"sentences": n, "samples": res.samples, "delta_f05": f"{res.delta_f_half:+.4f}",
                    "p_value": f"{res.p_value:.4f}", "significant": res.significant,
                    "seconds": f"{time.perf_counter() - t0:.2f}"})
    return out


if __name__ == "__main__":
    cfg, as_json = parse_config(Config)
    emit(run(cfg), as_json)

"""End-to-end demo: synthetic data, a pipeline config, a run and its reports.

Everything runs offline. With ``--remote`` a local mock chat endpoint is
started and a remote-synthesis step is added to the config.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from _config import parse_config

from gecsynth.m2 import write_m2
from gecsynth.mockserver import MockChatServer
from gecsynth.pipeline import run_pipeline, validate_config
from gecsynth.synthetic import VOCAB, clean_corpus, gold_corpus
from gecsynth.text import save_parallel


@dataclass
class Config:
    out: str = "runs/demo"
    clean_sentences: int = 5000
    gold_sentences: int = 1000
    sample: int = 500
    p_word: float = 0.15
    seed: int = 13
    remote: bool = False


TOML = """\
seed = {seed}
workdir = "run"

[files]
clean = "data/clean.txt"
words = "data/words.txt"
train = "data/train.m2"
lexicon = "data/lexicon.tsv"
pool = "data/pool.tsv"

[[steps]]
name = "sampled"
op = "sample"
input = "clean"
n = {sample}
output = "sampled.txt"

[[steps]]
name = "channel"
op = "fit-channel"
gold = "train"
output = "channel.json"

[[steps]]
name = "learned"
op = "synthesize-learned"
input = "sampled"
channel = "channel"
output = "learned.tsv"

[[steps]]
name = "learned_gold"
op = "extract-edits"
input = "learned"
lexicon = "lexicon"
output = "learned_gold.m2"

[[steps]]
name = "perfect_report"
op = "score"
gold = "learned_gold"
hyp = "learned"
hyp_column = 2
lexicon = "lexicon"
output = "perfect_report.json"

[[steps]]
name = "identity_report"
op = "score"
gold = "learned_gold"
hyp = "learned"
hyp_column = 1
output = "identity_report.json"

[[steps]]
name = "perfect_vs_identity"
op = "compare"
gold = "learned_gold"
hyp_a = "learned"
hyp_b = "learned"
hyp_a_column = 2
hyp_b_column = 1
samples = 2000
output = "compare.json"

[[steps]]
name = "prob"
op = "synthesize-prob"
input = "sampled"
wordlist = "words"
p_word = {p_word}
output = "prob.tsv"

[[steps]]
name = "prob_gold"
op = "extract-edits"
input = "prob"
lexicon = "lexicon"
output = "prob_gold.m2"
"""

REMOTE = """
[[steps]]
name = "remote"
op = "synthesize-remote"
input = "sampled"
gold_pool = "pool"
endpoint = "{url}"
model = "mock"
api_key_env = "GECSYNTH_DEMO_KEY"
output = "remote.tsv"
"""


def prepare(cfg: Config) -> Path:
    root = Path(cfg.out)
    data = root / "data"
    data.mkdir(parents=True, exist_ok=True)
    (data / "clean.txt").write_text("\n".join(clean_corpus(cfg.clean_sentences, cfg.seed)) + "\n", encoding="utf-8")
    (data / "words.txt").write_text("\n".join(VOCAB) + "\n", encoding="utf-8")
    (data / "lexicon.tsv").write_text("\n".join(VOCAB) + "\n", encoding="utf-8")
    g = gold_corpus(cfg.gold_sentences, seed=cfg.seed + 1)
    write_m2(g.records, data / "train.m2")
    save_parallel([(r.source.text(), c) for r, c in zip(g.records, g.clean)], data / "pool.tsv")
    return root


def main(cfg: Config) -> None:
    root = prepare(cfg)
    config = root / "pipeline.toml"
    text = TOML.format(seed=cfg.seed, sample=cfg.sample, p_word=cfg.p_word)
    server = MockChatServer().start() if cfg.remote else None
    try:
        if server:
            text += REMOTE.format(url=server.url)
        config.write_text(text, encoding="utf-8")
        problems = validate_config(config)
        if problems:
            raise SystemExit("\n".join(map(str, problems)))
        manifest = run_pipeline(config)
    finally:
        if server:
            server.stop()
    run = root / "run"
    for name in ("perfect_report", "identity_report"):
        r = json.loads((run / f"{name}.json").read_text(encoding="utf-8"))
        print(f"{name:16s} P={r['precision']:.4f} R={r['recall']:.4f} F0.5={r['f05']:.4f}")
    print("compare         ", (run / "compare.json").read_text(encoding="utf-8").replace("\n", " "))
    print(f"manifest        {len(manifest.steps)} steps, config {manifest.config_hash[:12]}")


if __name__ == "__main__":
    main(parse_config(Config, __doc__)[0])

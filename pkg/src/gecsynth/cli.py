"""Command-line entry point.

Exit codes: 0 success, 1 domain error (bad data, failed step), 2 usage error.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from collections import Counter

from . import __version__
from .errors import GecError

log = logging.getLogger("gecsynth")


class _StderrHandler(logging.StreamHandler):
    """Writes to whatever ``sys.stderr`` is at emit time."""

    @property
    def stream(self):
        return sys.stderr

    @stream.setter
    def stream(self, _):
        pass


def _setup_logging(verbose: bool) -> None:
    # own handler on the package logger, replaced per call so that
    # repeated main() calls in one process do not stack handlers
    handler = _StderrHandler()
    handler.setFormatter(logging.Formatter("ts=%(asctime)s level=%(levelname)s logger=%(name)s msg=%(message)s"))
    for h in list(log.handlers):
        log.removeHandler(h)
    log.addHandler(handler)
    log.setLevel(logging.DEBUG if verbose else logging.INFO)
    log.propagate = False


def _weights(text: str) -> dict[str, float]:
    out = {}
    for part in text.split(","):
        k, _, v = part.partition("=")
        try:
            out[k.strip()] = float(v)
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected name=weight pairs, got {part!r}") from None
    return out


def cmd_sample(args):
    from .text import SAMPLE_PRESETS, load_corpus, sample_corpus, save_corpus
    n = SAMPLE_PRESETS[args.preset] if args.preset else args.n
    corpus = load_corpus(args.input)
    out = sample_corpus(corpus, n, args.seed)
    save_corpus(out, args.out)
    log.info("sampled lines=%d of=%d seed=%d", len(out), len(corpus), args.seed)


def cmd_prob(args):
    from .prob import NoiseConfig, build_confusion_index, noise_corpus
    from .text import load_corpus, save_parallel
    kw = {}
    if args.op_weights:
        kw["op_weights"] = args.op_weights
    if args.char_op_weights:
        kw["char_op_weights"] = args.char_op_weights
    try:
        cfg = NoiseConfig(p_word=args.p_word, p_char=args.p_char, seed=args.seed, **kw)
    except ValueError as exc:
        raise GecError(str(exc)) from None
    idx = build_confusion_index(load_corpus(args.wordlist))
    pairs = noise_corpus(load_corpus(args.input), cfg, idx, threads=args.threads)
    save_parallel(pairs, args.out)
    log.info("synthesized kind=prob pairs=%d", len(pairs))


def cmd_learned(args):
    from .channel import corrupt_corpus, read_channel
    from .text import load_corpus, save_parallel
    stats = Counter()
    pairs = corrupt_corpus(load_corpus(args.input), read_channel(args.channel), args.seed,
                           threads=args.threads, stats=stats)
    save_parallel(pairs, args.out)
    skipped = stats.pop("<skipped>", 0)
    log.info("synthesized kind=learned pairs=%d applied=%d skipped=%d",
             len(pairs), sum(stats.values()), skipped)


def cmd_remote(args):
    from .remote import PromptTemplate, RemoteConfig, generate_remote
    from .text import load_corpus, load_parallel, save_parallel
    try:
        cfg = RemoteConfig(args.endpoint, args.model, temperature=args.temperature,
                           top_k=args.top_k or None, top_p=args.top_p, concurrency=args.concurrency,
                           max_attempts=args.max_attempts, timeout=args.timeout,
                           api_key_env=args.api_key_env)
    except ValueError as exc:
        raise GecError(str(exc)) from None
    res = generate_remote(list(load_corpus(args.input)), cfg, PromptTemplate.load(args.template),
                          load_parallel(args.gold_pool), args.seed, journal_dir=args.journal)
    save_parallel(res.pairs, args.out)
    if args.journal:
        with open(os.path.join(args.journal, "flags.jsonl"), "w", encoding="utf-8") as fh:
            for f in res.flags:
                fh.write(json.dumps(f, ensure_ascii=False) + "\n")
    log.info("synthesized kind=remote pairs=%d requested=%d flagged=%d",
             len(res.pairs), res.requested, len(res.flags))


def cmd_fit(args):
    from .channel import fit_channel, write_channel
    from .m2 import read_m2
    model = fit_channel(read_m2(args.gold), min_count=args.min_count)
    write_channel(model, args.out)
    log.info("fitted channel categories=%d patterns=%d", len(model.category_counts),
             sum(len(p) for p in model.patterns.values()))


def cmd_extract(args):
    from .align import Lexicon, extract_edits
    from .m2 import M2Record, write_m2
    from .text import load_parallel, tokenize
    lex = Lexicon.load(args.lexicon) if args.lexicon else None
    records = []
    for src, tgt in load_parallel(args.input):
        s = tokenize(src)
        records.append(M2Record(s, {0: tuple(extract_edits(s, tokenize(tgt), lex))}))
    write_m2(records, args.out)
    log.info("extracted records=%d edits=%d", len(records), sum(len(r.edits()) for r in records))


def cmd_classify(args):
    from dataclasses import replace
    from .align import Lexicon, classify_edit
    from .m2 import M2Record, read_m2, write_m2
    lex = Lexicon.load(args.lexicon) if args.lexicon else None
    out = []
    for rec in read_m2(args.m2):
        out.append(M2Record(rec.source, {
            a: tuple(replace(e, category=str(classify_edit(rec.source, e, lex))) for e in edits)
            for a, edits in rec.annotations.items()
        }))
    write_m2(out, args.out)


def cmd_score(args):
    from .align import Lexicon
    from .evaluate import category_recall_table, report_json, score
    from .m2 import read_m2
    from .text import load_lines
    lex = Lexicon.load(args.lexicon) if args.lexicon else None
    report = score(read_m2(args.gold), load_lines(args.hyp), lex, args.cumulative_annotator)
    with open(args.report, "w", encoding="utf-8") as fh:
        fh.write(report_json(report))
    print(f"P\t{report.precision:.4f}\nR\t{report.recall:.4f}\nF0.5\t{report.f_half:.4f}")
    for cat, m, t, r in category_recall_table(report):
        print(f"{cat}\t{m}/{t}\t{r:.4f}")


def cmd_compare(args):
    from .align import Lexicon
    from .evaluate import bootstrap_dict, compare, dumps_fixed
    from .m2 import read_m2
    from .text import load_lines
    lex = Lexicon.load(args.lexicon) if args.lexicon else None
    res = compare(read_m2(args.gold), load_lines(args.hyp_a), load_lines(args.hyp_b),
                  args.samples, args.alpha, args.seed, lex)
    print(dumps_fixed(bootstrap_dict(res)))


def cmd_pipeline(args):
    from .pipeline import run_pipeline
    manifest = run_pipeline(args.config)
    print(json.dumps(manifest.to_dict(), indent=2))


def cmd_validate(args):
    from .pipeline import validate_config
    diags = validate_config(args.config)
    for d in diags:
        print(d)
    if diags:
        return 1
    print("ok")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gecsynth", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    threads = dict(type=int, default=os.cpu_count() or 1, help="worker processes (default: all cores)")

    p = sub.add_parser("sample", help="uniform seeded sample of corpus lines")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    size = p.add_mutually_exclusive_group(required=True)
    size.add_argument("--n", type=int)
    size.add_argument("--preset", choices=["1M", "100k"])
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("synthesize", help="generate (erroneous, clean) pairs")
    syn = p.add_subparsers(dest="kind", required=True)

    q = syn.add_parser("prob", help="reverse-speller noise")
    q.add_argument("--in", dest="input", required=True)
    q.add_argument("--out", required=True)
    q.add_argument("--wordlist", required=True)
    q.add_argument("--p-word", type=float, default=0.15)
    q.add_argument("--p-char", type=float, default=0.02)
    q.add_argument("--op-weights", type=_weights, help="e.g. delete=1,insert=0.5")
    q.add_argument("--char-op-weights", type=_weights)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--threads", **threads)
    q.set_defaults(func=cmd_prob)

    q = syn.add_parser("learned", help="corpus-fitted error channel")
    q.add_argument("--in", dest="input", required=True)
    q.add_argument("--channel", required=True)
    q.add_argument("--out", required=True)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--threads", **threads)
    q.set_defaults(func=cmd_learned)

    q = syn.add_parser("remote", help="few-shot prompting of a chat endpoint")
    q.add_argument("--in", dest="input", required=True)
    q.add_argument("--out", required=True)
    q.add_argument("--gold-pool", required=True, help="TSV: erroneous TAB corrected")
    q.add_argument("--template", default="et", help="et, de, uk or a .tmpl path")
    q.add_argument("--endpoint", required=True)
    q.add_argument("--model", required=True)
    q.add_argument("--temperature", type=float, default=1.0)
    q.add_argument("--top-k", type=int, default=50, help="0 to omit")
    q.add_argument("--top-p", type=float)
    q.add_argument("--concurrency", type=int, default=4)
    q.add_argument("--max-attempts", type=int, default=5)
    q.add_argument("--timeout", type=float, default=60.0)
    q.add_argument("--api-key-env", default="OPENAI_API_KEY")
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--journal")
    q.set_defaults(func=cmd_remote)

    p = sub.add_parser("fit-channel", help="fit an error channel on gold M2")
    p.add_argument("--gold", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--min-count", type=int, default=1)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("extract-edits", help="TSV (source TAB target) to M2")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--lexicon")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("classify", help="relabel the edits of an M2 file")
    p.add_argument("--m2", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--lexicon")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("score", help="P/R/F0.5 against gold M2")
    p.add_argument("--gold", required=True)
    p.add_argument("--hyp", required=True)
    p.add_argument("--report", required=True)
    p.add_argument("--lexicon")
    p.add_argument("--cumulative-annotator", action="store_true")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("compare", help="paired bootstrap test of two systems")
    p.add_argument("--gold", required=True)
    p.add_argument("--hyp-a", required=True)
    p.add_argument("--hyp-b", required=True)
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lexicon")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("pipeline", help="run a TOML pipeline config")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("validate", help="check a pipeline config without running it")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_validate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    _setup_logging(args.verbose)
    try:
        rc = args.func(args)
    except (GecError, OSError, ValueError) as exc:
        log.error("%s", exc)
        return 1
    return rc or 0


if __name__ == "__main__":
    sys.exit(main())

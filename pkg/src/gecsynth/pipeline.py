"""Config-driven pipelines: sample -> synthesize -> score -> compare.

Config files are TOML::

    seed = 13
    workdir = "runs/demo"          # relative to the config file
    manifest = "manifest.json"     # relative to workdir

    [files]                        # declared inputs, relative to the config file
    clean = "data/clean.txt"
    gold = "data/train.m2"

    [[steps]]
    name = "sampled"
    op = "sample"
    input = "clean"                # a [files] alias or another step's name
    n = 1000
    output = "sampled.txt"         # relative to workdir

See ``STEP_SCHEMA`` for every op, its parameters and their defaults.
"""
from __future__ import annotations

import hashlib
import json
import logging
import sys
import time
from dataclasses import dataclass, field
from graphlib import CycleError, TopologicalSorter
from pathlib import Path
from typing import Any, Callable

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import __version__
from .errors import ConfigError, GecError, StepError

log = logging.getLogger(__name__)

REQUIRED = object()


def _prob(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool) and 0.0 <= v <= 1.0


def _int_ge(lo):
    return lambda v: isinstance(v, int) and not isinstance(v, bool) and v >= lo


def _num_ge(lo):
    return lambda v: isinstance(v, (int, float)) and not isinstance(v, bool) and v >= lo


def _str(v):
    return isinstance(v, str) and bool(v)


def _bool(v):
    return isinstance(v, bool)


def _weights(v):
    return isinstance(v, dict) and all(_num_ge(0)(x) for x in v.values())


def _sample_n(v):
    from .text import SAMPLE_PRESETS
    return v in SAMPLE_PRESETS or _int_ge(0)(v)


# param -> (default or REQUIRED, validator, legal-range text, is_reference)
STEP_SCHEMA: dict[str, dict[str, tuple[Any, Callable, str, bool]]] = {
    "sample": {
        "input": (REQUIRED, _str, "file alias or step name", True),
        "n": (REQUIRED, _sample_n, "integer >= 0 or preset '1M' / '100k'", False),
        "seed": (None, _int_ge(-2**63), "integer", False),
        "output": (REQUIRED, _str, "path", False),
    },
    "fit-channel": {
        "gold": (REQUIRED, _str, "file alias or step name", True),
        "min_count": (1, _int_ge(1), "integer >= 1", False),
        "output": (REQUIRED, _str, "path", False),
    },
    "synthesize-prob": {
        "input": (REQUIRED, _str, "file alias or step name", True),
        "wordlist": (REQUIRED, _str, "file alias or step name", True),
        "p_word": (0.15, _prob, "[0, 1]", False),
        "p_char": (0.02, _prob, "[0, 1]", False),
        "op_weights": (None, _weights, "table of non-negative weights", False),
        "char_op_weights": (None, _weights, "table of non-negative weights", False),
        "seed": (None, _int_ge(-2**63), "integer", False),
        "output": (REQUIRED, _str, "path", False),
    },
    "synthesize-learned": {
        "input": (REQUIRED, _str, "file alias or step name", True),
        "channel": (REQUIRED, _str, "file alias or step name", True),
        "seed": (None, _int_ge(-2**63), "integer", False),
        "output": (REQUIRED, _str, "path", False),
    },
    "synthesize-remote": {
        "input": (REQUIRED, _str, "file alias or step name", True),
        "gold_pool": (REQUIRED, _str, "file alias or step name", True),
        "template": ("et", _str, "et, de, uk or a template path", False),
        "endpoint": (REQUIRED, _str, "URL", False),
        "model": (REQUIRED, _str, "model name", False),
        "temperature": (1.0, _num_ge(0), ">= 0", False),
        "top_k": (50, _int_ge(0), "integer >= 0 (0 disables)", False),
        "concurrency": (4, _int_ge(1), "integer >= 1", False),
        "max_attempts": (5, _int_ge(1), "integer >= 1", False),
        "api_key_env": ("OPENAI_API_KEY", _str, "environment variable name", False),
        "journal": ("journal", _str, "directory", False),
        "seed": (None, _int_ge(-2**63), "integer", False),
        "output": (REQUIRED, _str, "path", False),
    },
    "extract-edits": {
        "input": (REQUIRED, _str, "file alias or step name", True),
        "lexicon": (None, _str, "file alias or step name", True),
        "output": (REQUIRED, _str, "path", False),
    },
    "score": {
        "gold": (REQUIRED, _str, "file alias or step name", True),
        "hyp": (REQUIRED, _str, "file alias or step name", True),
        "hyp_column": (0, lambda v: v in (0, 1, 2), "0 (plain text), 1 or 2 (TSV column)", False),
        "lexicon": (None, _str, "file alias or step name", True),
        "cumulative_annotator": (False, _bool, "boolean", False),
        "output": (REQUIRED, _str, "path", False),
    },
    "compare": {
        "gold": (REQUIRED, _str, "file alias or step name", True),
        "hyp_a": (REQUIRED, _str, "file alias or step name", True),
        "hyp_b": (REQUIRED, _str, "file alias or step name", True),
        "hyp_column": (0, lambda v: v in (0, 1, 2), "0 (plain text), 1 or 2 (TSV column)", False),
        "hyp_a_column": (None, lambda v: v in (0, 1, 2), "0, 1 or 2; overrides hyp_column for hyp_a", False),
        "hyp_b_column": (None, lambda v: v in (0, 1, 2), "0, 1 or 2; overrides hyp_column for hyp_b", False),
        "samples": (10_000, _int_ge(1), "integer >= 1", False),
        "alpha": (0.05, _prob, "[0, 1]", False),
        "seed": (None, _int_ge(-2**63), "integer", False),
        "lexicon": (None, _str, "file alias or step name", True),
        "output": (REQUIRED, _str, "path", False),
    },
}

OFFLINE_OPS = frozenset(STEP_SCHEMA) - {"synthesize-remote"}


@dataclass(frozen=True)
class Diagnostic:
    key: str
    message: str

    def __str__(self):
        return f"{self.key}: {self.message}"


@dataclass
class Step:
    name: str
    op: str
    params: dict


@dataclass
class PipelineConfig:
    steps: list[Step]
    seed: int = 0
    files: dict[str, Path] = field(default_factory=dict)
    workdir: Path = Path(".")
    manifest: Path = Path("manifest.json")
    config_hash: str = ""

    def output_path(self, step: Step) -> Path:
        return self.workdir / step.params["output"]

    def resolve(self, ref: str) -> Path:
        if ref in self.files:
            return self.files[ref]
        for s in self.steps:
            if s.name == ref:
                return self.output_path(s)
        raise ConfigError(f"unknown reference {ref!r}")


@dataclass
class RunManifest:
    toolkit_version: str
    config_hash: str
    seeds: dict[str, int]
    steps: list[dict]

    def to_dict(self) -> dict:
        return {"toolkit_version": self.toolkit_version, "config_hash": self.config_hash,
                "seeds": self.seeds, "steps": self.steps}


def _parse(raw: dict, base: Path, config_hash: str) -> tuple[PipelineConfig | None, list[Diagnostic]]:
    diags: list[Diagnostic] = []
    known_top = {"seed", "workdir", "manifest", "files", "steps"}
    for k in raw:
        if k not in known_top:
            diags.append(Diagnostic(k, f"unknown key; expected one of {sorted(known_top)}"))
    seed = raw.get("seed", 0)
    if not _int_ge(-2**63)(seed):
        diags.append(Diagnostic("seed", "must be an integer"))
        seed = 0
    files = {}
    for alias, p in (raw.get("files") or {}).items():
        if not _str(p):
            diags.append(Diagnostic(f"files.{alias}", "must be a path string"))
            continue
        files[alias] = (base / p).resolve()
    workdir = (base / raw.get("workdir", ".")).resolve()
    manifest = workdir / raw.get("manifest", "manifest.json")

    raw_steps = raw.get("steps")
    if not isinstance(raw_steps, list) or not raw_steps:
        diags.append(Diagnostic("steps", "at least one [[steps]] table is required"))
        return None, diags
    steps, names = [], set()
    for i, rs in enumerate(raw_steps):
        where = f"steps[{i}]"
        if not isinstance(rs, dict):
            diags.append(Diagnostic(where, "must be a table"))
            continue
        name = rs.get("name", f"step{i}")
        op = rs.get("op")
        if name in names or name in files:
            diags.append(Diagnostic(f"{where}.name", f"duplicate name {name!r}"))
        names.add(name)
        if op not in STEP_SCHEMA:
            diags.append(Diagnostic(f"{where}.op", f"unknown op {op!r}; expected one of {sorted(STEP_SCHEMA)}"))
            continue
        schema = STEP_SCHEMA[op]
        params = {}
        for k, v in rs.items():
            if k in ("name", "op"):
                continue
            if k not in schema:
                diags.append(Diagnostic(f"{where}.{k}", f"unknown parameter for op {op!r}"))
                continue
            _, check, legal, _ = schema[k]
            if not check(v):
                diags.append(Diagnostic(f"{where}.{k}", f"value {v!r} outside legal range {legal}"))
            params[k] = v
        for k, (default, _, _, _) in schema.items():
            if k not in params:
                if default is REQUIRED:
                    diags.append(Diagnostic(f"{where}.{k}", "required parameter is missing"))
                else:
                    params[k] = default
        if op == "synthesize-prob":
            from .prob import CHAR_OPS, WORD_OPS
            for key, allowed in (("op_weights", WORD_OPS), ("char_op_weights", CHAR_OPS)):
                w = params.get(key)
                if w is not None:
                    bad = set(w) - set(allowed)
                    if bad:
                        diags.append(Diagnostic(f"{where}.{key}", f"unknown operations {sorted(bad)}; legal: {list(allowed)}"))
                    elif not any(x > 0 for x in w.values()):
                        diags.append(Diagnostic(f"{where}.{key}", "weights must not all be zero"))
        steps.append(Step(name, op, params))
    cfg = PipelineConfig(steps, seed, files, workdir, manifest, config_hash)
    return cfg, diags


def _dependencies(cfg: PipelineConfig, diags: list[Diagnostic]) -> dict[str, set[str]]:
    names = {s.name for s in cfg.steps}
    graph: dict[str, set[str]] = {}
    for i, s in enumerate(cfg.steps):
        deps = set()
        for k, (_, _, _, is_ref) in STEP_SCHEMA[s.op].items():
            ref = s.params.get(k)
            if not is_ref or ref is None:
                continue
            if ref in names:
                deps.add(ref)
            elif ref in cfg.files:
                if not cfg.files[ref].exists():
                    diags.append(Diagnostic(f"files.{ref}", f"file not found: {cfg.files[ref]}"))
            else:
                diags.append(Diagnostic(f"steps[{i}].{k}", f"{ref!r} is neither a [files] alias nor a step name"))
        graph[s.name] = deps
    return graph


def load_config(path) -> tuple[PipelineConfig | None, list[Diagnostic]]:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        return None, [Diagnostic(str(path), f"cannot read config: {exc.strerror}")]
    try:
        raw = tomllib.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, tomllib.TOMLDecodeError) as exc:
        return None, [Diagnostic(str(path), f"not valid TOML: {exc}")]
    cfg, diags = _parse(raw, path.parent.resolve(), hashlib.sha256(data).hexdigest())
    if cfg is not None:
        graph = _dependencies(cfg, diags)
        try:
            tuple(TopologicalSorter(graph).static_order())
        except CycleError as exc:
            diags.append(Diagnostic("steps", f"dependency cycle: {' -> '.join(exc.args[1])}"))
    return cfg, diags


def validate_config(path) -> list[Diagnostic]:
    """Schema, range and dependency checks. Never runs a step or opens a socket."""
    return load_config(path)[1]


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _hyp_lines(path: Path, column: int) -> list[str]:
    from .text import load_lines, load_parallel
    if column:
        return [pair[column - 1] for pair in load_parallel(path)]
    return load_lines(path)


def _run_step(cfg: PipelineConfig, step: Step, seed: int) -> list[Path]:
    """Execute one step; returns the input paths it read."""
    from . import channel, evaluate, m2, prob, remote, text
    from .align import Lexicon, extract_edits

    p = step.params
    ref = cfg.resolve
    out = cfg.output_path(step)
    out.parent.mkdir(parents=True, exist_ok=True)
    lexicon = Lexicon.load(ref(p["lexicon"])) if p.get("lexicon") else None

    if step.op == "sample":
        n = text.SAMPLE_PRESETS.get(p["n"], p["n"])
        corpus = text.load_corpus(ref(p["input"]))
        text.save_corpus(text.sample_corpus(corpus, n, seed), out)
        return [ref(p["input"])]
    if step.op == "fit-channel":
        model = channel.fit_channel(m2.read_m2(ref(p["gold"])), min_count=p["min_count"])
        channel.write_channel(model, out)
        return [ref(p["gold"])]
    if step.op == "synthesize-prob":
        idx = prob.build_confusion_index(text.load_corpus(ref(p["wordlist"])))
        kw = {k: p[k] for k in ("op_weights", "char_op_weights") if p.get(k) is not None}
        nc = prob.NoiseConfig(p_word=p["p_word"], p_char=p["p_char"], seed=seed, **kw)
        pairs = prob.noise_corpus(text.load_corpus(ref(p["input"])), nc, idx)
        text.save_parallel(pairs, out)
        return [ref(p["input"]), ref(p["wordlist"])]
    if step.op == "synthesize-learned":
        model = channel.read_channel(ref(p["channel"]))
        pairs = channel.corrupt_corpus(text.load_corpus(ref(p["input"])), model, seed)
        text.save_parallel(pairs, out)
        return [ref(p["input"]), ref(p["channel"])]
    if step.op == "synthesize-remote":
        rc = remote.RemoteConfig(p["endpoint"], p["model"], temperature=p["temperature"],
                                 top_k=p["top_k"] or None, concurrency=p["concurrency"],
                                 max_attempts=p["max_attempts"], api_key_env=p["api_key_env"])
        res = remote.generate_remote(list(text.load_corpus(ref(p["input"]))), rc,
                                     remote.PromptTemplate.load(p["template"]),
                                     text.load_parallel(ref(p["gold_pool"])), seed,
                                     journal_dir=cfg.workdir / p["journal"])
        text.save_parallel(res.pairs, out)
        if res.flags:
            log.warning("step=%s flagged=%d", step.name, len(res.flags))
        return [ref(p["input"]), ref(p["gold_pool"])]
    if step.op == "extract-edits":
        records = []
        for src, tgt in text.load_parallel(ref(p["input"])):
            s = text.tokenize(src)
            records.append(m2.M2Record(s, {0: tuple(extract_edits(s, text.tokenize(tgt), lexicon))}))
        m2.write_m2(records, out)
        return [ref(p["input"])]
    if step.op == "score":
        gold = m2.read_m2(ref(p["gold"]))
        hyp = _hyp_lines(ref(p["hyp"]), p["hyp_column"])
        report = evaluate.score(gold, hyp, lexicon, p["cumulative_annotator"])
        out.write_text(evaluate.report_json(report), encoding="utf-8")
        log.info("step=%s P=%.4f R=%.4f F0.5=%.4f", step.name, report.precision, report.recall, report.f_half)
        return [ref(p["gold"]), ref(p["hyp"])]
    if step.op == "compare":
        gold = m2.read_m2(ref(p["gold"]))
        col_a = p["hyp_column"] if p["hyp_a_column"] is None else p["hyp_a_column"]
        col_b = p["hyp_column"] if p["hyp_b_column"] is None else p["hyp_b_column"]
        res = evaluate.compare(gold, _hyp_lines(ref(p["hyp_a"]), col_a),
                               _hyp_lines(ref(p["hyp_b"]), col_b),
                               p["samples"], p["alpha"], seed, lexicon)
        out.write_text(evaluate.dumps_fixed(evaluate.bootstrap_dict(res)) + "\n", encoding="utf-8")
        return [ref(p["gold"]), ref(p["hyp_a"]), ref(p["hyp_b"])]
    raise ConfigError(f"unknown op {step.op!r}")


def run_pipeline(cfg: PipelineConfig | str | Path) -> RunManifest:
    if not isinstance(cfg, PipelineConfig):
        cfg, diags = load_config(cfg)
        if diags:
            raise ConfigError("; ".join(map(str, diags)))
    graph = {s.name: set() for s in cfg.steps}
    names = set(graph)
    for s in cfg.steps:
        for k, (_, _, _, is_ref) in STEP_SCHEMA[s.op].items():
            if is_ref and s.params.get(k) in names:
                graph[s.name].add(s.params[k])
    try:
        order = list(TopologicalSorter(graph).static_order())
    except CycleError as exc:
        raise ConfigError(f"dependency cycle: {' -> '.join(exc.args[1])}", "steps") from None
    by_name = {s.name: s for s in cfg.steps}
    cfg.workdir.mkdir(parents=True, exist_ok=True)
    records, seeds = [], {"global": cfg.seed}
    for name in order:
        step = by_name[name]
        seed = step.params.get("seed")
        seed = cfg.seed if seed is None else seed
        seeds[name] = seed
        log.info("step=%s op=%s seed=%d start", name, step.op, seed)
        t0 = time.perf_counter()
        try:
            inputs = _run_step(cfg, step, seed)
        except (GecError, OSError, ValueError) as exc:
            raise StepError(name, exc) from exc
        elapsed = time.perf_counter() - t0
        outp = cfg.output_path(step)
        records.append({
            "name": name, "op": step.op, "seed": seed,
            "inputs": {str(pth): sha256_file(pth) for pth in inputs},
            "outputs": {str(outp): sha256_file(outp)},
            "seconds": round(elapsed, 3),
            "offline": step.op in OFFLINE_OPS,
        })
        log.info("step=%s done seconds=%.3f", name, elapsed)
    manifest = RunManifest(__version__, cfg.config_hash, seeds, records)
    cfg.manifest.parent.mkdir(parents=True, exist_ok=True)
    cfg.manifest.write_text(json.dumps(manifest.to_dict(), indent=2) + "\n", encoding="utf-8")
    return manifest

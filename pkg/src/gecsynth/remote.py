"""Few-shot error generation through an OpenAI-compatible chat endpoint."""
from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Sequence

import httpx

from .errors import AuthError, EndpointError, SlotCountMismatch
from .rng import stream_rng
from .text import tokenize

log = logging.getLogger(__name__)

BUILTIN_TEMPLATES = ("et", "de", "uk")

DEFAULT_REFUSALS = (
    "I'm sorry", "I am sorry", "I cannot", "I can't", "As an AI", "Sorry, but",
)

_QUOTES = (('"', '"'), ("'", "'"), ("„", "“"), ("“", "”"), ("«", "»"), ("‘", "’"))
_C0 = {i: " " for i in range(0x20)}


@dataclass(frozen=True)
class PromptTemplate:
    instruction: str
    input_label: str
    output_label: str
    n_examples: int = 4
    language: str = ""

    @classmethod
    def parse(cls, text: str) -> "PromptTemplate":
        """Header ``key = value`` lines, a ``---`` line, then the instruction."""
        head, sep, body = text.partition("\n---\n")
        if not sep:
            raise ValueError("template needs a '---' line between header and instruction")
        meta = {}
        for line in head.splitlines():
            if line.strip():
                k, _, v = line.partition("=")
                meta[k.strip()] = v.strip()
        return cls(body.strip("\n"), meta["input_label"], meta["output_label"],
                   int(meta.get("examples", 4)), meta.get("language", ""))

    @classmethod
    def load(cls, name: str) -> "PromptTemplate":
        if name in BUILTIN_TEMPLATES:
            text = resources.files("gecsynth").joinpath("data", "templates", f"{name}.tmpl").read_text("utf-8")
        else:
            text = Path(name).read_text(encoding="utf-8")
        return cls.parse(text)


def _builtin_labels() -> tuple[tuple[str, ...], tuple[str, ...]]:
    ins, outs = [], []
    for name in BUILTIN_TEMPLATES:
        t = PromptTemplate.load(name)
        ins.append(t.input_label)
        outs.append(t.output_label)
    return tuple(ins), tuple(outs)


INPUT_LABELS, OUTPUT_LABELS = _builtin_labels()


def render_prompt(t: PromptTemplate, examples: Sequence[tuple[str, str]], input: str) -> str:
    if len(examples) != t.n_examples:
        raise SlotCountMismatch(f"template has {t.n_examples} example slots, got {len(examples)} examples")
    lines = [t.instruction, ""]
    for correct, incorrect in examples:
        lines += [f"{t.input_label}: {correct}", f"{t.output_label}: {incorrect}", ""]
    lines += [f"{t.input_label}: {input}", f"{t.output_label}:"]
    return "\n".join(lines)


def clean_output(output: str, input: str, input_labels=INPUT_LABELS, output_labels=OUTPUT_LABELS) -> str:
    """Strip echoed field labels and wrapping quotes until nothing changes.

    A label or quote that the input itself contains is left alone.
    """
    src = input.strip()
    out = output
    while True:
        prev = out
        for lab in output_labels:
            tag = lab + ":"
            if tag in out and tag not in src:
                out = out.rsplit(tag, 1)[1]
        for lab in input_labels:
            tag = lab + ":"
            if out.lstrip().startswith(tag) and tag not in src:
                out = out.lstrip()[len(tag):]
        lines = [ln for ln in out.splitlines() if ln.strip()]
        out = " ".join((lines[0] if lines else "").translate(_C0).split())
        for q_open, q_close in _QUOTES:
            if len(out) >= 2 and out.startswith(q_open) and out.endswith(q_close) and not src.startswith(q_open):
                out = out[len(q_open):-len(q_close)].strip()
        if out == prev:
            return out


def post_process_detail(input: str, output: str | None, bounds=(0.5, 1.5),
                        refusals: Sequence[str] = DEFAULT_REFUSALS,
                        input_labels=INPUT_LABELS, output_labels=OUTPUT_LABELS) -> tuple[str, str | None]:
    """Return (sentence, reason) where reason names why the input was kept."""
    if not output:
        return input, "empty"
    cleaned = clean_output(output, input, input_labels, output_labels)
    if not cleaned:
        return input, "empty"
    if cleaned == input.strip():
        return input, None
    low = cleaned.lower()
    if any(low.startswith(p.lower()) for p in refusals):
        return input, "refusal"
    n_in = len(tokenize(" ".join(input.translate(_C0).split())))
    n_out = len(tokenize(cleaned))
    if n_in == 0 or not bounds[0] <= n_out / n_in <= bounds[1]:
        return input, "length"
    return cleaned, None


def post_process(input: str, output: str | None, bounds=(0.5, 1.5), **kw) -> str:
    return post_process_detail(input, output, bounds, **kw)[0]


@dataclass(frozen=True)
class RemoteConfig:
    endpoint: str
    model: str
    temperature: float = 1.0
    top_k: int | None = 50
    top_p: float | None = None
    concurrency: int = 4
    max_attempts: int = 5
    backoff_base: float = 0.5
    timeout: float = 60.0
    api_key_env: str = "OPENAI_API_KEY"
    length_bounds: tuple[float, float] = (0.5, 1.5)
    refusals: tuple[str, ...] = DEFAULT_REFUSALS

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.concurrency < 1:
            raise ValueError("concurrency must be >= 1")
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")

    @property
    def url(self) -> str:
        base = self.endpoint.rstrip("/")
        return base if base.endswith("/chat/completions") else base + "/chat/completions"


class Journal:
    """Append-only JSONL cache of raw responses keyed by request hash."""

    def __init__(self, directory):
        self.path = Path(directory) / "responses.jsonl"
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self.entries: dict[str, str] = {}
        if self.path.exists():
            text = self.path.read_text(encoding="utf-8")
            if text and not text.endswith("\n"):
                with open(self.path, "a", encoding="utf-8") as fh:
                    fh.write("\n")
            for line in text.splitlines():
                try:
                    rec = json.loads(line)
                except ValueError:
                    # torn final line from an interrupted run
                    continue
                self.entries[rec["key"]] = rec["response"]

    def get(self, key):
        return self.entries.get(key)

    def __contains__(self, key):
        return key in self.entries

    def append(self, key: str, response: str) -> None:
        with self._lock:
            self.entries[key] = response
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps({"key": key, "response": response}, ensure_ascii=False) + "\n")
                fh.flush()


class ChatClient:
    def __init__(self, cfg: RemoteConfig, sleep=time.sleep):
        self.cfg = cfg
        self._sleep = sleep
        key = os.environ.get(cfg.api_key_env, "")
        headers = {"Content-Type": "application/json"}
        if key:
            headers["Authorization"] = f"Bearer {key}"
        else:
            log.warning("environment variable %s is not set; sending requests without a key", cfg.api_key_env)
        self._http = httpx.Client(timeout=cfg.timeout, headers=headers)

    def close(self):
        self._http.close()

    def body(self, prompt: str) -> dict:
        body = {"model": self.cfg.model, "temperature": self.cfg.temperature,
                "messages": [{"role": "user", "content": prompt}]}
        if self.cfg.top_k:
            body["top_k"] = self.cfg.top_k
        if self.cfg.top_p is not None:
            body["top_p"] = self.cfg.top_p
        return body

    def complete(self, prompt: str) -> str:
        last = None
        for attempt in range(self.cfg.max_attempts):
            if attempt:
                self._sleep(self.cfg.backoff_base * 2 ** (attempt - 1))
            try:
                r = self._http.post(self.cfg.url, json=self.body(prompt))
            except httpx.HTTPError as exc:
                last = f"{type(exc).__name__}: {exc}"
                continue
            if r.status_code in (401, 403):
                raise AuthError(f"endpoint rejected credentials (HTTP {r.status_code})")
            if r.status_code == 429 or r.status_code >= 500:
                last = f"HTTP {r.status_code}"
                continue
            if r.status_code >= 400:
                raise EndpointError(f"HTTP {r.status_code}: {r.text[:200]}")
            try:
                choice = r.json()["choices"][0]
            except (ValueError, KeyError, IndexError) as exc:
                last = f"malformed response: {exc}"
                continue
            if choice.get("finish_reason") == "content_filter":
                return ""
            return (choice.get("message") or {}).get("content") or ""
        raise EndpointError(f"giving up after {self.cfg.max_attempts} attempts ({last})")


def request_key(cfg: RemoteConfig, prompt: str) -> str:
    blob = json.dumps([cfg.model, cfg.temperature, cfg.top_k, cfg.top_p, prompt], ensure_ascii=False)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


@dataclass
class RemoteResult:
    pairs: list[tuple[str, str]]
    flags: list[dict] = field(default_factory=list)
    requested: int = 0


def pick_examples(gold_pool: Sequence[tuple[str, str]], n: int, seed: int, index: int) -> list[tuple[str, str]]:
    """``n`` distinct (correct, incorrect) examples for sentence ``index``.

    Pool rows are (source, target) = (erroneous, corrected).
    """
    if len(gold_pool) < n:
        raise ValueError(f"gold pool has {len(gold_pool)} pairs, need {n}")
    rng = stream_rng(seed, "remote-examples", index)
    return [(tgt, src) for src, tgt in rng.sample(list(gold_pool), n)]


def generate_remote(lines: Sequence[str], cfg: RemoteConfig, template: PromptTemplate,
                    gold_pool: Sequence[tuple[str, str]], seed: int, journal_dir=None,
                    client: ChatClient | None = None) -> RemoteResult:
    """Noise ``lines`` via the endpoint; returns (noised, clean) pairs in input order.

    Responses are journaled, so a rerun only requests what is missing.
    Sentences whose request fails after all retries keep their clean text and
    are flagged. Authentication failures abort the run.
    """
    if not gold_pool:
        raise ValueError("gold pool is empty")
    gold_pool = list(gold_pool)
    journal = Journal(journal_dir) if journal_dir is not None else None
    own_client = client is None
    client = client or ChatClient(cfg)
    in_labels = tuple(dict.fromkeys(INPUT_LABELS + (template.input_label,)))
    out_labels = tuple(dict.fromkeys(OUTPUT_LABELS + (template.output_label,)))

    prompts, keys, raw = [], [], {}
    for i, line in enumerate(lines):
        p = render_prompt(template, pick_examples(gold_pool, template.n_examples, seed, i), line)
        prompts.append(p)
        keys.append(request_key(cfg, p))
    todo = [i for i, k in enumerate(keys) if journal is None or k not in journal]
    errors: dict[str, str] = {}

    def work(i):
        try:
            text = client.complete(prompts[i])
        except EndpointError as exc:
            errors[keys[i]] = str(exc)
            return
        raw[keys[i]] = text
        if journal is not None:
            journal.append(keys[i], text)

    try:
        seen = set()
        unique = [i for i in todo if not (keys[i] in seen or seen.add(keys[i]))]
        with ThreadPoolExecutor(max_workers=cfg.concurrency) as pool:
            futures = [pool.submit(work, i) for i in unique]
            for f in futures:
                try:
                    f.result()
                except AuthError:
                    for g in futures:
                        g.cancel()
                    raise
    finally:
        if own_client:
            client.close()

    result = RemoteResult([], requested=len(unique))
    for i, line in enumerate(lines):
        k = keys[i]
        text = raw.get(k) if k in raw else (journal.get(k) if journal is not None else None)
        if text is None:
            result.pairs.append((line, line))
            result.flags.append({"index": i, "reason": "endpoint-error", "detail": errors.get(k, "")})
            continue
        out, reason = post_process_detail(line, text, cfg.length_bounds, cfg.refusals, in_labels, out_labels)
        result.pairs.append((out, line))
        if reason:
            result.flags.append({"index": i, "reason": reason})
    return result

"""Corpus-fitted error channel.

Gold GEC edits are read in reverse (corrected text -> learner text) and
stored as an inventory of count-weighted patterns ``clean tokens -> error
tokens``. A pattern with an empty error side deletes tokens (the learner
omitted them), one with an empty clean side inserts tokens (the learner added
them) at a position drawn from the sentence-relative deciles seen in the gold
data; anything else is a replacement.
"""
from __future__ import annotations

import bisect
import hashlib
import itertools
import json
from collections import Counter, defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from .errors import ChecksumMismatch, EmptyGold, VersionMismatch
from .m2 import M2Record, serialize_m2
from .rng import stream_rng
from .text import TokenSequence, default_spacing, detokenize, safe_spacing, tokenize

FORMAT = "gecsynth-error-channel"
VERSION = 1

Pattern = tuple[tuple[str, ...], tuple[str, ...]]


@dataclass
class ErrorChannelModel:
    edit_count_hist: dict[int, int]
    category_counts: dict[str, int]
    patterns: dict[str, dict[Pattern, int]]
    deciles: dict[str, list[int]]
    fingerprint: str = ""
    version: int = VERSION
    min_count: int = 1

    def __post_init__(self):
        self._index = None

    def __eq__(self, other):
        if not isinstance(other, ErrorChannelModel):
            return NotImplemented
        return (self.edit_count_hist, self.category_counts, self.patterns, self.deciles,
                self.fingerprint, self.version, self.min_count) == (
            other.edit_count_hist, other.category_counts, other.patterns, other.deciles,
            other.fingerprint, other.version, other.min_count)

    @property
    def edits_per_sentence(self) -> dict[int, float]:
        total = sum(self.edit_count_hist.values())
        return {k: v / total for k, v in sorted(self.edit_count_hist.items())}

    @property
    def category_dist(self) -> dict[str, float]:
        total = sum(self.category_counts.values())
        return {k: v / total for k, v in sorted(self.category_counts.items())}

    def has_pattern(self, clean, error) -> bool:
        key = (tuple(clean), tuple(error))
        return any(key in pats for pats in self.patterns.values())

    def _sampling_index(self):
        if self._index is None:
            cats = sorted(self.category_counts)
            self._index = {
                "k_values": sorted(self.edit_count_hist),
                "k_cum": list(itertools.accumulate(self.edit_count_hist[k] for k in sorted(self.edit_count_hist))),
                "cats": cats,
                "cat_cum": list(itertools.accumulate(self.category_counts[c] for c in cats)),
                "by_first": {c: _index_by_first(self.patterns[c]) for c in cats},
                "by_clean": {c: _index_by_clean(self.patterns[c]) for c in cats},
                "inserts": {c: sorted(p for p in self.patterns[c] if not p[0]) for c in cats},
            }
        return self._index


def _index_by_first(patterns):
    """first clean token -> distinct clean sides starting with it"""
    out = defaultdict(set)
    for clean, _ in patterns:
        if clean:
            out[clean[0]].add(clean)
    return {t: sorted(cs) for t, cs in out.items()}


def _index_by_clean(patterns):
    """clean side -> (total count, error sides, cumulative counts)"""
    groups = defaultdict(list)
    for (clean, error), n in sorted(patterns.items()):
        groups[clean].append((error, n))
    return {c: (sum(n for _, n in g), [e for e, _ in g], list(itertools.accumulate(n for _, n in g)))
            for c, g in groups.items()}


def _draw(rng, values, cum):
    x = rng.random() * cum[-1]
    return values[bisect.bisect_right(cum, x)]


def fit_channel(gold: list[M2Record], min_count: int = 1) -> ErrorChannelModel:
    """Fit a channel from gold records, using each record's first annotator."""
    hist: Counter = Counter()
    pats: dict[str, Counter] = defaultdict(Counter)
    dec: dict[str, list[int]] = defaultdict(lambda: [0] * 10)
    for rec in gold:
        edits = rec.edits()
        src = rec.source.tokens
        clean_len = len(src) + sum(len(e.correction_tokens) - (e.end - e.start) for e in edits)
        shift = 0
        n_used = 0
        for e in edits:
            clean = tuple(e.correction_tokens)
            error = tuple(src[e.start:e.end])
            pos = e.start + shift
            shift += len(clean) - len(error)
            if clean == error:
                continue
            n_used += 1
            pats[e.category][(clean, error)] += 1
            if not clean:
                dec[e.category][min(9, 10 * pos // max(1, clean_len))] += 1
        hist[n_used] += 1
    if min_count > 1:
        pats = {c: Counter({p: n for p, n in ps.items() if n >= min_count}) for c, ps in pats.items()}
    patterns = {c: dict(ps) for c, ps in sorted(pats.items()) if ps}
    if not patterns:
        raise EmptyGold("gold data contains no usable edits")
    cat_counts = {c: sum(ps.values()) for c, ps in patterns.items()}
    deciles = {c: list(dec[c]) for c in patterns if any(not p[0] for p in patterns[c])}
    return ErrorChannelModel(dict(sorted(hist.items())), cat_counts, patterns, deciles,
                             fingerprint=hashlib.sha256(serialize_m2(gold).encode()).hexdigest(),
                             min_count=min_count)


@dataclass
class Corruption:
    tokens: TokenSequence
    applied: list[str] = field(default_factory=list)
    skipped: int = 0


def corrupt_sentence(s: TokenSequence, m: ErrorChannelModel, seed: int, sentence_index: int) -> Corruption:
    """Sample errors into a clean sentence; deterministic per (seed, sentence_index).

    A site is usable only if it and its immediate neighbours are untouched by
    earlier edits in the same sentence, so applied edits stay separable.
    """
    ix = m._sampling_index()
    rng = stream_rng(seed, "channel", sentence_index)
    k = _draw(rng, ix["k_values"], ix["k_cum"])
    cats = [_draw(rng, ix["cats"], ix["cat_cum"]) for _ in range(k)]
    toks = list(s.tokens)
    space = list(s.spacing)
    locked = [False] * len(toks)
    applied, skipped = [], 0

    def free(lo, hi):
        return not any(locked[max(0, lo):min(len(toks), hi)])

    for cat in cats:
        # applicable clean sides and their free sites; a pattern is then drawn
        # with probability proportional to its count among applicable ones
        sites: dict[tuple, list[int]] = {}
        first = ix["by_first"][cat]
        for p, tok in enumerate(toks):
            for clean in first.get(tok, ()):
                L = len(clean)
                if (L == 1 or tuple(toks[p:p + L]) == clean) and free(p - 1, p + L + 1):
                    sites.setdefault(clean, []).append(p)
        slots = [q for q in range(len(toks) + 1) if free(q - 1, q + 1)]
        groups = ix["by_clean"][cat]
        keys = sorted(sites)
        weights = [groups[c][0] for c in keys]
        if slots and () in groups:
            keys.append(())
            weights.append(groups[()][0])
        if not keys:
            skipped += 1
            continue
        clean = _draw(rng, keys, list(itertools.accumulate(weights)))
        _, errors, cum = groups[clean]
        error = _draw(rng, errors, cum)
        if clean:
            p = sites[clean][rng.randrange(len(sites[clean]))]
            L = len(clean)
            toks[p:p + L] = error
            space[p:p + L] = [space[p]] + list(default_spacing(("x",) + error)[2:]) if error else []
            if error:
                locked[p:p + L] = [True] * len(error)
            else:
                del locked[p:p + L]
                for q in (p - 1, p):
                    if 0 <= q < len(locked):
                        locked[q] = True
        else:
            q = _insert_position(rng, m.deciles.get(cat), slots, len(toks))
            toks[q:q] = error
            space[q:q] = default_spacing(("x",) + error)[1:]
            locked[q:q] = [True] * len(error)
        applied.append(cat)
    return Corruption(TokenSequence(tuple(toks), safe_spacing(toks, space)), applied, skipped)


def _insert_position(rng, deciles, slots, n):
    if deciles and sum(deciles):
        d = _draw(rng, list(range(10)), list(itertools.accumulate(deciles)))
        target = (d + rng.random()) / 10 * n
        best = min(abs(q - target) for q in slots)
        slots = [q for q in slots if abs(q - target) == best]
    return slots[rng.randrange(len(slots))]


def _corrupt_chunk(args):
    lines, start, m, seed = args
    pairs, stats = [], Counter()
    for k, line in enumerate(lines):
        res = corrupt_sentence(tokenize(line), m, seed, start + k)
        pairs.append((detokenize(res.tokens), line))
        stats.update(res.applied)
        stats["<skipped>"] += res.skipped
    return pairs, stats


def corrupt_corpus(lines, m: ErrorChannelModel, seed: int, threads: int = 1,
                   chunk_size: int = 2000, stats: Counter | None = None) -> list[tuple[str, str]]:
    """(corrupted, clean) pairs in input order, independent of ``threads``."""
    lines = list(lines)
    m._sampling_index()
    chunks = [(lines[i:i + chunk_size], i, m, seed) for i in range(0, len(lines), chunk_size)]
    if threads <= 1 or len(chunks) <= 1:
        results = list(map(_corrupt_chunk, chunks))
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_corrupt_chunk, chunks))
    out = []
    for pairs, st in results:
        out.extend(pairs)
        if stats is not None:
            stats.update(st)
    return out


def _payload(m: ErrorChannelModel) -> dict:
    return {
        "edit_count_hist": [[k, n] for k, n in sorted(m.edit_count_hist.items())],
        "category_counts": dict(sorted(m.category_counts.items())),
        "patterns": {
            c: [[list(clean), list(error), n] for (clean, error), n in sorted(ps.items())]
            for c, ps in sorted(m.patterns.items())
        },
        "deciles": dict(sorted(m.deciles.items())),
        "min_count": m.min_count,
    }


def _checksum(payload: dict) -> str:
    blob = json.dumps(payload, sort_keys=True, ensure_ascii=False, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def save_channel(m: ErrorChannelModel) -> str:
    payload = _payload(m)
    doc = {"format": FORMAT, "version": m.version, "fingerprint": m.fingerprint,
           "checksum": _checksum(payload), "payload": payload}
    return json.dumps(doc, ensure_ascii=False, indent=1) + "\n"


def load_channel(text: str) -> ErrorChannelModel:
    try:
        doc = json.loads(text)
        payload = doc["payload"]
        version = doc["version"]
        checksum = doc["checksum"]
    except (ValueError, KeyError, TypeError) as exc:
        raise ChecksumMismatch(f"channel file is truncated or corrupt: {exc}") from None
    if doc.get("format") != FORMAT:
        raise ChecksumMismatch(f"not an error-channel file (format={doc.get('format')!r})")
    if version != VERSION:
        raise VersionMismatch(f"channel file version {version}, this toolkit reads version {VERSION}")
    if _checksum(payload) != checksum:
        raise ChecksumMismatch("channel payload checksum does not match")
    return ErrorChannelModel(
        edit_count_hist={int(k): n for k, n in payload["edit_count_hist"]},
        category_counts=dict(payload["category_counts"]),
        patterns={c: {(tuple(cl), tuple(er)): n for cl, er, n in ps} for c, ps in payload["patterns"].items()},
        deciles={c: list(v) for c, v in payload["deciles"].items()},
        fingerprint=doc.get("fingerprint", ""),
        version=version,
        min_count=payload.get("min_count", 1),
    )


def read_channel(path) -> ErrorChannelModel:
    with open(path, encoding="utf-8") as fh:
        return load_channel(fh.read())


def write_channel(m: ErrorChannelModel, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(save_channel(m))

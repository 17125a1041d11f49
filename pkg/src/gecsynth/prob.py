"""Reverse-speller noise: context-free word and character perturbations.

Word-level operations pick speller-style confusion candidates from a
dictionary; character-level operations imitate typos.
"""
from __future__ import annotations

import bisect
import itertools
import logging
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .errors import EmptyLexicon
from .rng import stream_rng
from .text import PUNCT_CHARS, Corpus, TokenSequence, char_distance, default_spacing, detokenize, is_punct, safe_spacing, tokenize

log = logging.getLogger(__name__)

WORD_OPS = ("substitute-confusion", "delete", "insert", "swap-adjacent", "recase")
CHAR_OPS = ("char-insert", "char-delete", "char-substitute", "char-swap")

MAX_DISTANCE = 2


@dataclass(frozen=True)
class NoiseConfig:
    p_word: float = 0.15
    p_char: float = 0.02
    op_weights: Mapping[str, float] = field(default_factory=lambda: dict.fromkeys(WORD_OPS, 1.0))
    char_op_weights: Mapping[str, float] = field(default_factory=lambda: dict.fromkeys(CHAR_OPS, 1.0))
    seed: int = 0
    keyboard: Mapping[str, str] | None = None  # char -> neighbouring keys
    max_suggestions: int = 10

    def __post_init__(self):
        for name in ("p_word", "p_char"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        for name, allowed in (("op_weights", WORD_OPS), ("char_op_weights", CHAR_OPS)):
            w = dict(getattr(self, name))
            unknown = set(w) - set(allowed)
            if unknown:
                raise ValueError(f"{name}: unknown operations {sorted(unknown)}")
            if any(v < 0 for v in w.values()) or not any(v > 0 for v in w.values()):
                raise ValueError(f"{name}: weights must be non-negative and not all zero")
            object.__setattr__(self, name, {k: float(w.get(k, 0.0)) for k in allowed})


def _deletes(word: str, depth: int) -> set[str]:
    out = {word}
    frontier = {word}
    for _ in range(depth):
        nxt = set()
        for w in frontier:
            for i in range(len(w)):
                nxt.add(w[:i] + w[i + 1:])
        out |= nxt
        frontier = nxt
    return out


class ConfusionIndex:
    """Dictionary with edit-distance-bounded suggestion lookup.

    Uses symmetric deletes: two words within distance 2 share a string
    reachable from each by at most 2 character deletions. Candidates found
    this way are verified with the exact distance.
    """

    def __init__(self, words: Mapping[str, int]):
        if not words:
            raise EmptyLexicon("confusion index needs at least one word")
        # rank 0 = most frequent; ties broken by first appearance
        self.rank = {w: r for r, w in enumerate(words)}
        self.words = frozenset(self.rank)
        self._deletes: dict[str, list[str]] = {}
        for w in self.rank:
            for d in _deletes(w, MAX_DISTANCE):
                self._deletes.setdefault(d, []).append(w)
        self.alphabet = "".join(sorted({ch for w in self.words for ch in w
                                        if not ch.isspace() and ch not in PUNCT_CHARS}))
        freq = Counter(words)
        self.unigrams = Unigrams(freq)

    def __contains__(self, word):
        return word in self.words

    def __len__(self):
        return len(self.words)

    def suggest(self, word: str, k: int = 10) -> list[str]:
        seen = set()
        for d in _deletes(word, MAX_DISTANCE):
            for cand in self._deletes.get(d, ()):
                if cand != word:
                    seen.add(cand)
        scored = []
        for cand in seen:
            dist = char_distance(word, cand)
            if dist <= MAX_DISTANCE:
                scored.append((dist, self.rank[cand], cand))
        scored.sort()
        return [c for _, _, c in scored[:k]]


def build_confusion_index(wordlist: Corpus | Iterable[str]) -> ConfusionIndex:
    """Lines are ``word`` or ``word TAB frequency``.

    Words with a frequency are ranked by it (descending); the rest follow in
    file order.
    """
    entries: dict[str, float] = {}
    order: dict[str, int] = {}
    for i, line in enumerate(wordlist):
        word, _, freq = line.partition("\t")
        word = word.strip()
        if not word:
            continue
        f = float(freq) if freq.strip() else 0.0
        if word not in entries:
            order[word] = i
            entries[word] = f
        else:
            entries[word] = max(entries[word], f)
    ranked = sorted(entries, key=lambda w: (-entries[w], order[w]))
    return ConfusionIndex({w: max(int(entries[w]), 1) for w in ranked})


class Unigrams:
    """Frequency table for sampling inserted words."""

    def __init__(self, counts: Mapping[str, int]):
        items = sorted((w, c) for w, c in counts.items() if c > 0)
        self.words = [w for w, _ in items]
        self.cum = list(itertools.accumulate(c for _, c in items))

    @classmethod
    def from_corpus(cls, corpus: Iterable[str]) -> "Unigrams":
        counts = Counter()
        for line in corpus:
            counts.update(t for t in tokenize(line).tokens if not is_punct(t))
        return cls(counts)

    def __bool__(self):
        return bool(self.words)

    def sample(self, rng) -> str:
        x = rng.random() * self.cum[-1]
        return self.words[bisect.bisect_right(self.cum, x)]


def _choose(rng, weights: Mapping[str, float], exclude=()) -> str | None:
    items = [(k, w) for k, w in weights.items() if w > 0 and k not in exclude]
    if not items:
        return None
    total = sum(w for _, w in items)
    x = rng.random() * total
    for k, w in items:
        x -= w
        if x < 0:
            return k
    return items[-1][0]


def _other_char(rng, ch: str, alphabet: str, keyboard) -> str | None:
    pool = keyboard.get(ch.lower(), "") if keyboard else ""
    if not pool:
        pool = alphabet
    pool = [c for c in pool if c != ch]
    return rng.choice(pool) if pool else None


def char_noise(token: str, rng, cfg: NoiseConfig, alphabet: str) -> str:
    """Apply one character operation that changes the token and keeps it non-empty."""
    tried = set()
    while True:
        op = _choose(rng, cfg.char_op_weights, tried)
        if op is None:
            # all configured ops inapplicable; append a character as last resort
            extra = _other_char(rng, "", alphabet or "x", None) or "x"
            return token + extra
        tried.add(op)
        n = len(token)
        if op == "char-insert":
            c = _other_char(rng, "", alphabet, cfg.keyboard)
            if c is None:
                continue
            pos = rng.randrange(n + 1)
            return token[:pos] + c + token[pos:]
        if op == "char-delete" and n > 1:
            pos = rng.randrange(n)
            return token[:pos] + token[pos + 1:]
        if op == "char-substitute" and n:
            pos = rng.randrange(n)
            c = _other_char(rng, token[pos], alphabet, cfg.keyboard)
            if c is None:
                continue
            return token[:pos] + c + token[pos + 1:]
        if op == "char-swap":
            sites = [i for i in range(n - 1) if token[i] != token[i + 1]]
            if sites:
                i = rng.choice(sites)
                return token[:i] + token[i + 1] + token[i] + token[i + 2:]


def _recase(token: str) -> str | None:
    for i, ch in enumerate(token):
        if ch.isalpha():
            flipped = ch.lower() if ch.isupper() else ch.upper()
            if flipped == ch:
                return None
            return token[:i] + flipped + token[i + 1:]
    return None


def noise_sentence(s: TokenSequence, cfg: NoiseConfig, idx: ConfusionIndex,
                   sentence_index: int, unigrams: Unigrams | None = None,
                   stats: Counter | None = None) -> TokenSequence:
    """Perturb a sentence; deterministic for (cfg.seed, sentence_index).

    Each token is selected with probability ``p_word`` and changed by one
    word operation. Every word operation changes the output; inapplicable
    ones fall back to a character operation. A token already moved by a
    swap still draws, and a hit counts as perturbed without a second op.
    A deletion that would leave the sentence empty is skipped. Unselected tokens that contain
    letters then get a character operation with probability ``p_char`` per
    character. If ``stats`` is given it receives per-operation counts plus
    ``"tokens"`` and ``"perturbed"`` totals.
    """
    rng = stream_rng(cfg.seed, "prob", sentence_index)
    unigrams = unigrams if unigrams else idx.unigrams
    tokens = list(s.tokens)
    spacing = list(s.spacing)
    n = len(tokens)
    out: list[str] = []
    space: list[bool] = []  # layout of out; slots keep the source flag
    word_changed: list[bool] = []
    swap_next = None
    deleted = 0
    perturbed = 0

    def count(op):
        if stats is not None:
            stats[op] += 1

    for i, tok in enumerate(tokens):
        if swap_next is not None:
            # token i already moved in a swap with i-1; it still takes its
            # draw so that selection stays Bernoulli(p_word) per token
            swap_next = None
            if rng.random() < cfg.p_word:
                perturbed += 1
            continue
        if rng.random() >= cfg.p_word:
            out.append(tok)
            space.append(spacing[i])
            word_changed.append(False)
            continue
        op = _choose(rng, cfg.op_weights)
        if op == "delete" and deleted + 1 >= n:
            # would empty the sentence: skip this deletion
            out.append(tok)
            space.append(spacing[i])
            word_changed.append(False)
            continue
        perturbed += 1
        if op == "swap-adjacent":
            if i + 1 < n and tokens[i + 1] != tok:
                out.extend([tokens[i + 1], tok])
                space.extend([spacing[i], spacing[i + 1]])
                word_changed.extend([True, True])
                swap_next = i + 1
                count(op)
                continue
            if out and out[-1] != tok and not word_changed[-1]:
                prev = out.pop()
                word_changed.pop()
                out.extend([tok, prev])
                space.append(spacing[i])
                word_changed.extend([True, True])
                count(op)
                continue
            op = "char"
        new = None
        if op == "substitute-confusion":
            cands = idx.suggest(tok, cfg.max_suggestions)
            if cands:
                new = rng.choice(cands)
            else:
                op = "char"
        elif op == "recase":
            new = _recase(tok)
            if new is None:
                op = "char"
        elif op == "delete":
            deleted += 1
            count(op)
            continue
        elif op == "insert":
            ins = unigrams.sample(rng) if unigrams else None
            if ins:
                out.extend([tok, ins])
                space.extend([spacing[i], default_spacing(["x", ins])[1]])
                word_changed.extend([False, True])
                count(op)
                continue
            op = "char"
        if op == "char":
            new = char_noise(tok, rng, cfg, idx.alphabet)
        out.append(new)
        space.append(spacing[i])
        word_changed.append(True)
        count(op)

    if cfg.p_char > 0:
        for j, tok in enumerate(out):
            if word_changed[j] or not any(ch.isalpha() for ch in tok):
                continue
            hits = sum(rng.random() < cfg.p_char for _ in tok)
            for _ in range(hits):
                tok = char_noise(tok, rng, cfg, idx.alphabet)
            if hits:
                count("char-noised")
            out[j] = tok
    if stats is not None:
        stats["tokens"] += n
        stats["perturbed"] += perturbed
    return TokenSequence(tuple(out), safe_spacing(out, space))


def _noise_chunk(args):
    lines, start, cfg, idx, unigrams = args
    out = []
    for k, line in enumerate(lines):
        ts = tokenize(line)
        out.append((detokenize(noise_sentence(ts, cfg, idx, start + k, unigrams)), line))
    return out


def noise_corpus(c: Corpus | Iterable[str], cfg: NoiseConfig, idx: ConfusionIndex,
                 threads: int = 1, chunk_size: int = 2000) -> list[tuple[str, str]]:
    """Noise every line; returns (noised, clean) pairs in input order.

    Sentence ``i`` is always noised with stream index ``i``, so the result
    does not depend on ``threads``.
    """
    lines = list(c)
    unigrams = Unigrams.from_corpus(lines)
    chunks = [(lines[i:i + chunk_size], i, cfg, idx, unigrams) for i in range(0, len(lines), chunk_size)]
    if threads <= 1 or len(chunks) <= 1:
        results = map(_noise_chunk, chunks)
        return [p for chunk in results for p in chunk]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return [p for chunk in pool.map(_noise_chunk, chunks) for p in chunk]

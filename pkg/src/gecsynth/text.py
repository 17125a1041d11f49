"""Tokenization, normalization, corpus I/O and seeded sampling.

Tokenization rules
------------------
1. Split on whitespace.
2. Every character in :data:`PUNCT_CHARS` becomes a token of its own::

       . , ; : ! ? " ' ( ) « » „ “ ” — …

   so ``"a,b"`` gives ``["a", ",", "b"]`` and ``"don't"`` gives
   ``["don", "'", "t"]``.
3. Hyphens are not in the class, so ``"well-known"`` stays one token.

Each token records whether a space preceded it, which makes
``detokenize(tokenize(s)) == s`` for normalized ``s``.

Normalization mapping
---------------------
=======================  =========
input                    output
=======================  =========
„ “ ” ‟ ″ 〝 〞 ＂         ``"``
‘ ’ ‚ ‛ ′ ＇              ``'``
‐ ‑ (hyphens)            ``-``
‒ – ― (dashes)           ``—``
=======================  =========

followed by whitespace collapse and trimming.
"""
from __future__ import annotations

import hashlib
import unicodedata
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ControlCharacterError, CorpusLoadError, SampleTooLarge
from .rng import keyed_u64

PUNCT_CHARS = frozenset(".,;:!?\"'()«»„“”—…")

NORMALIZE_TABLE = str.maketrans({
    "„": '"', "“": '"', "”": '"', "‟": '"', "″": '"', "〝": '"', "〞": '"', "＂": '"',
    "‘": "'", "’": "'", "‚": "'", "‛": "'", "′": "'", "＇": "'",
    "‐": "-", "‑": "-",
    "‒": "—", "–": "—", "―": "—",
})

# Presets for sample sizes of the synthetic sets.
SAMPLE_PRESETS = {"1M": 1_000_000, "100k": 100_000}

# Tokens that attach to the previous token when inserted without layout info.
_NO_SPACE_BEFORE = frozenset(".,;:!?)»”…")


@dataclass(frozen=True, eq=False)
class TokenSequence:
    """A tokenized sentence.

    Equality and hashing use ``tokens`` only; ``spacing`` is layout used by
    :func:`detokenize`.
    """

    tokens: tuple[str, ...] = ()
    spacing: tuple[bool, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        if not self.spacing and self.tokens:
            object.__setattr__(self, "spacing", default_spacing(self.tokens))
        else:
            object.__setattr__(self, "spacing", tuple(self.spacing))
        if len(self.spacing) != len(self.tokens):
            raise ValueError("spacing must have one flag per token")

    @classmethod
    def from_tokens(cls, tokens: Iterable[str]) -> "TokenSequence":
        """Space-separated tokens, as on an M2 ``S`` line."""
        tokens = tuple(tokens)
        return cls(tokens, tuple(i > 0 for i in range(len(tokens))))

    def __len__(self):
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)

    def __getitem__(self, i):
        return self.tokens[i]

    def __eq__(self, other):
        if isinstance(other, TokenSequence):
            return self.tokens == other.tokens
        return NotImplemented

    def __hash__(self):
        return hash(self.tokens)

    def __repr__(self):
        return f"TokenSequence({list(self.tokens)!r})"

    def text(self) -> str:
        return detokenize(self)


def default_spacing(tokens: Sequence[str]) -> tuple[bool, ...]:
    """Guess layout for tokens that carry none (e.g. inserted corrections)."""
    out = []
    for i, tok in enumerate(tokens):
        out.append(i > 0 and tok not in _NO_SPACE_BEFORE)
    return tuple(out)


def safe_spacing(tokens: Sequence[str], spacing: Sequence[bool]) -> tuple[bool, ...]:
    """Force a space between two word tokens so the text re-tokenizes the same."""
    out = [False] if tokens else []
    for i in range(1, len(tokens)):
        glued = tokens[i][:1] not in PUNCT_CHARS and tokens[i - 1][-1:] not in PUNCT_CHARS
        out.append(bool(spacing[i]) or glued)
    return tuple(out)


def _check_controls(s: str) -> None:
    for pos, ch in enumerate(s):
        if ch != "\t" and (ord(ch) < 0x20 or ord(ch) == 0x7F):
            raise ControlCharacterError(f"control character U+{ord(ch):04X} at offset {pos}")


def tokenize(s: str) -> TokenSequence:
    _check_controls(s)
    tokens: list[str] = []
    spacing: list[bool] = []
    space_pending = False
    buf: list[str] = []

    def flush():
        nonlocal space_pending
        if buf:
            tokens.append("".join(buf))
            spacing.append(space_pending)
            buf.clear()
            space_pending = False

    for ch in s:
        if ch.isspace():
            flush()
            space_pending = bool(tokens)
        elif ch in PUNCT_CHARS:
            flush()
            tokens.append(ch)
            spacing.append(space_pending)
            space_pending = False
        else:
            buf.append(ch)
    flush()
    return TokenSequence(tuple(tokens), tuple(spacing))


def detokenize(ts: TokenSequence) -> str:
    parts = []
    for tok, sp in zip(ts.tokens, ts.spacing):
        if sp and parts:
            parts.append(" ")
        parts.append(tok)
    return "".join(parts)


def normalize(s: str) -> str:
    return " ".join(s.translate(NORMALIZE_TABLE).split())


def is_punct(token: str) -> bool:
    return bool(token) and all(
        ch in PUNCT_CHARS or unicodedata.category(ch).startswith("P") for ch in token
    )


def char_distance(a: str, b: str) -> int:
    """Optimal-string-alignment distance (adjacent transposition counts 1)."""
    if a == b:
        return 0
    n, m = len(a), len(b)
    if not n or not m:
        return n or m
    prev2 = None
    prev = list(range(m + 1))
    for i in range(1, n + 1):
        cur = [i] + [0] * m
        ai = a[i - 1]
        for j in range(1, m + 1):
            bj = b[j - 1]
            c = prev[j - 1] + (ai != bj)
            if prev[j] + 1 < c:
                c = prev[j] + 1
            if cur[j - 1] + 1 < c:
                c = cur[j - 1] + 1
            if i > 1 and j > 1 and ai == b[j - 2] and a[i - 2] == bj and ai != bj:
                if prev2[j - 2] + 1 < c:
                    c = prev2[j - 2] + 1
            cur[j] = c
        prev2, prev = prev, cur
    return prev[m]


@dataclass(frozen=True)
class Corpus:
    lines: tuple[str, ...] = ()
    origin: str = "<memory>"

    def __post_init__(self):
        object.__setattr__(self, "lines", tuple(self.lines))

    def __len__(self):
        return len(self.lines)

    def __iter__(self):
        return iter(self.lines)

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        for line in self.lines:
            h.update(line.encode("utf-8"))
            h.update(b"\n")
        return h.hexdigest()


def _read_utf8(path) -> str:
    data = Path(path).read_bytes()
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise CorpusLoadError(f"{path}: invalid UTF-8 at byte {exc.start}") from exc


def load_corpus(path) -> Corpus:
    """One sentence per line; blank lines are dropped."""
    text = _read_utf8(path)
    lines = [ln.rstrip("\r") for ln in text.split("\n")]
    return Corpus(tuple(ln for ln in lines if ln.strip()), origin=str(path))


def load_lines(path) -> list[str]:
    """Every line, blank ones included (hypothesis files stay aligned)."""
    text = _read_utf8(path)
    if text.endswith("\n"):
        text = text[:-1]
    return [ln.rstrip("\r") for ln in text.split("\n")] if text else []


def save_corpus(corpus: Iterable[str], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in corpus:
            fh.write(line)
            fh.write("\n")


def load_parallel(path) -> list[tuple[str, str]]:
    """Two-column TSV (source TAB target), no header."""
    pairs = []
    for lineno, line in enumerate(_read_utf8(path).split("\n"), 1):
        line = line.rstrip("\r")
        if not line:
            continue
        cols = line.split("\t")
        if len(cols) != 2:
            raise CorpusLoadError(f"{path}:{lineno}: expected 2 tab-separated columns, got {len(cols)}")
        pairs.append((cols[0], cols[1]))
    return pairs


def save_parallel(pairs: Iterable[tuple[str, str]], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for src, tgt in pairs:
            if "\t" in src or "\t" in tgt:
                raise ValueError("TSV fields must not contain tabs")
            fh.write(f"{src}\t{tgt}\n")


def sample_corpus(c: Corpus, n: int, seed: int) -> Corpus:
    """Uniform sample of ``n`` lines without replacement.

    Each line gets a key from a counter-based hash of (seed, line index); the
    ``n`` smallest keys win and come out in key order.
    """
    if n > len(c):
        raise SampleTooLarge(f"cannot sample {n} lines from a corpus of {len(c)}")
    if n < 0:
        raise ValueError("n must be non-negative")
    keys = keyed_u64(seed, "sample", np.arange(len(c), dtype=np.uint64))
    order = np.argsort(keys, kind="stable")[:n]
    return Corpus(tuple(c.lines[i] for i in order), origin=f"{c.origin}#sample(n={n},seed={seed})")

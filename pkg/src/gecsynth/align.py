"""Edit extraction, application and classification.

Token alignment is a restricted Damerau-Levenshtein DP with costs

=====================  ====
match                  0
case-only substitute   0.5
substitute             1
insert / delete        1
adjacent transpose     1
=====================  ====

Costs are held internally in half-units so all arithmetic is integral.
Maximal runs of non-match operations become one edit.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable

from .errors import OverlapError
from .m2 import Edit, check_edits
from .text import TokenSequence, char_distance, default_spacing, is_punct, _read_utf8

MATCH, SUBSTITUTE, INSERT, DELETE, TRANSPOSE = "match", "substitute", "insert", "delete", "transpose"

# half-unit costs
_SUB, _CASE, _INDEL, _TRANS = 2, 1, 2, 2

HALL_SUSPECT = "HALL-SUSPECT"

NOUN_TAGS = frozenset({"NOUN", "PROPN", "N", "S", "NN", "NNS", "H"})
VERB_TAGS = frozenset({"VERB", "AUX", "V", "VB"})
OPEN_CLASS_TAGS = NOUN_TAGS | VERB_TAGS | frozenset({"ADJ", "ADV", "A", "D", "JJ", "RB", "INTJ", "X"})


@dataclass(frozen=True)
class AlignmentOp:
    kind: str
    src_start: int
    src_end: int
    tgt_start: int
    tgt_end: int


@dataclass(frozen=True)
class CategoryLabel:
    operation: str  # M, U or R
    type: str

    def __str__(self):
        return f"{self.operation}:{self.type}"

    @classmethod
    def parse(cls, s: str) -> "CategoryLabel":
        op, _, rest = s.partition(":")
        return cls(op, rest)


class Lexicon:
    """Word forms with optional (lemma, POS) analyses.

    Load order never matters: analyses are kept as sets.
    """

    def __init__(self, entries: Iterable[tuple[str, str, str]] = ()):
        self._analyses: dict[str, set[tuple[str, str]]] = defaultdict(set)
        for surface, lemma, pos in entries:
            self.add(surface, lemma, pos)

    def add(self, surface: str, lemma: str = "", pos: str = "") -> None:
        self._analyses[surface].add((lemma, pos.upper()))

    def __contains__(self, word: str) -> bool:
        return word in self._analyses or word.lower() in self._analyses

    def __len__(self):
        return len(self._analyses)

    def analyses(self, word: str) -> set[tuple[str, str]]:
        found = self._analyses.get(word)
        if found is None:
            found = self._analyses.get(word.lower(), set())
        return {a for a in found if a[0] or a[1]}

    @classmethod
    def from_words(cls, words: Iterable[str]) -> "Lexicon":
        lex = cls()
        for w in words:
            lex._analyses.setdefault(w, set())
        return lex

    @classmethod
    def load(cls, path) -> "Lexicon":
        """UTF-8 TSV ``surface TAB lemma TAB pos``; missing columns are allowed."""
        lex = cls()
        for line in _read_utf8(path).split("\n"):
            line = line.rstrip("\r")
            if not line:
                continue
            cols = line.split("\t")
            cols += [""] * (3 - len(cols))
            lex.add(cols[0], cols[1], cols[2])
        return lex


def _tokens(x) -> tuple[str, ...]:
    return x.tokens if isinstance(x, TokenSequence) else tuple(x)


def align(source, target) -> tuple[float, list[AlignmentOp]]:
    """Minimum-cost alignment. Returns (cost, ops) with ops tiling both sides."""
    a, b = _tokens(source), _tokens(target)
    n, m = len(a), len(b)
    al = [t.lower() for t in a]
    bl = [t.lower() for t in b]
    D = [[0] * (m + 1) for _ in range(n + 1)]
    D[0] = list(range(0, _INDEL * (m + 1), _INDEL))
    for i in range(1, n + 1):
        Di, Dp = D[i], D[i - 1]
        Di[0] = _INDEL * i
        ai, ali = a[i - 1], al[i - 1]
        for j in range(1, m + 1):
            bj = b[j - 1]
            if ai == bj:
                c = Dp[j - 1]
            elif ali == bl[j - 1]:
                c = Dp[j - 1] + _CASE
            else:
                c = Dp[j - 1] + _SUB
            d = Dp[j] + _INDEL
            if d < c:
                c = d
            d = Di[j - 1] + _INDEL
            if d < c:
                c = d
            if i > 1 and j > 1 and ai != bj and ai == b[j - 2] and a[i - 2] == bj:
                d = D[i - 2][j - 2] + _TRANS
                if d < c:
                    c = d
            Di[j] = c

    # Backtrace; ties prefer match, transpose, substitute, delete, insert.
    ops: list[AlignmentOp] = []
    i, j = n, m
    while i or j:
        c = D[i][j]
        if i and j:
            ai, bj = a[i - 1], b[j - 1]
            if ai == bj and c == D[i - 1][j - 1]:
                ops.append(AlignmentOp(MATCH, i - 1, i, j - 1, j))
                i, j = i - 1, j - 1
                continue
            if (i > 1 and j > 1 and ai != bj and ai == b[j - 2] and a[i - 2] == bj
                    and c == D[i - 2][j - 2] + _TRANS):
                ops.append(AlignmentOp(TRANSPOSE, i - 2, i, j - 2, j))
                i, j = i - 2, j - 2
                continue
            if ai != bj:
                sub = _CASE if al[i - 1] == bl[j - 1] else _SUB
                if c == D[i - 1][j - 1] + sub:
                    ops.append(AlignmentOp(SUBSTITUTE, i - 1, i, j - 1, j))
                    i, j = i - 1, j - 1
                    continue
        if i and c == D[i - 1][j] + _INDEL:
            ops.append(AlignmentOp(DELETE, i - 1, i, j, j))
            i -= 1
        else:
            ops.append(AlignmentOp(INSERT, i, i, j - 1, j))
            j -= 1
    ops.reverse()
    return D[n][m] / 2, ops


def op_cost(op: AlignmentOp, source, target) -> float:
    a, b = _tokens(source), _tokens(target)
    if op.kind == MATCH:
        return 0.0
    if op.kind == SUBSTITUTE:
        x, y = a[op.src_start], b[op.tgt_start]
        return 0.5 if x.lower() == y.lower() else 1.0
    return 1.0


def extract_edits(source, target, lex: Lexicon | None = None, annotator: int = 0) -> list[Edit]:
    src = source if isinstance(source, TokenSequence) else TokenSequence.from_tokens(source)
    tgt = _tokens(target)
    _, ops = align(src, tgt)
    edits = []
    run = None
    for op in ops + [None]:
        if op is not None and op.kind != MATCH:
            if run is None:
                run = [op.src_start, op.src_end, op.tgt_start, op.tgt_end]
            else:
                run[1], run[3] = op.src_end, op.tgt_end
            continue
        if run is not None:
            s0, s1, t0, t1 = run
            e = Edit(s0, s1, " ".join(tgt[t0:t1]), "OTHER", annotator)
            cat = str(classify_edit(src, e, lex))
            edits.append(Edit(s0, s1, e.correction, cat, annotator))
            run = None
    return edits


def apply_edits(source, edits: Iterable[Edit]) -> TokenSequence:
    src = source if isinstance(source, TokenSequence) else TokenSequence.from_tokens(source)
    edits = sorted(edits, key=lambda e: (e.start, e.end))
    problem = check_edits(edits, len(src))
    if problem:
        raise OverlapError(problem)
    tokens = list(src.tokens)
    spacing = list(src.spacing)
    for e in reversed(edits):
        new = e.correction_tokens
        new_spacing = list(default_spacing(new))
        if new and e.start < e.end:
            new_spacing[0] = spacing[e.start]
        elif new:
            new_spacing[0] = e.start > 0 and default_spacing(["", new[0]])[1]
        tokens[e.start:e.end] = new
        spacing[e.start:e.end] = new_spacing
    if spacing:
        spacing[0] = False
    return TokenSequence(tuple(tokens), tuple(spacing))


def _is_word(tok: str) -> bool:
    return any(ch.isalpha() for ch in tok)


def _open_class(tok: str, lex: Lexicon | None) -> bool:
    if not _is_word(tok):
        return False
    if lex is None:
        return True
    tags = {pos for _, pos in lex.analyses(tok) if pos}
    return not tags or bool(tags & OPEN_CLASS_TAGS)


def classify_edit(source: TokenSequence, e: Edit, lex: Lexicon | None = None) -> CategoryLabel:
    src_toks = list(_tokens(source)[e.start:e.end])
    cor_toks = e.correction_tokens
    if e.start == e.end:
        op = "M"
    elif not cor_toks:
        op = "U"
    else:
        op = "R"
    affected = src_toks + cor_toks
    if affected and all(is_punct(t) for t in affected):
        return CategoryLabel(op, "PUNCT")
    if op == "R":
        src_str = " ".join(src_toks)
        if src_str != e.correction and src_str.lower() == e.correction.lower():
            return CategoryLabel(op, "CASE")
        if len(src_toks) >= 2 and sorted(src_toks) == sorted(cor_toks):
            return CategoryLabel(op, "WO")
        if len(src_toks) == 1 and len(cor_toks) == 1 and lex is not None:
            s, c = src_toks[0], cor_toks[0]
            if s not in lex and c in lex and char_distance(s, c) <= 2:
                return CategoryLabel(op, "SPELL")
            shared = {
                (lemma, pos) for lemma, pos in lex.analyses(s) if lemma
            } & {(lemma, pos) for lemma, pos in lex.analyses(c) if lemma}
            tags = {pos for _, pos in shared}
            if tags & NOUN_TAGS:
                return CategoryLabel(op, "NOM:FORM")
            if tags & VERB_TAGS:
                return CategoryLabel(op, "VERB:FORM")
    words = [t for t in affected if _is_word(t)]
    if words and all(_open_class(t, lex) for t in words):
        return CategoryLabel(op, "LEX")
    return CategoryLabel(op, "OTHER")


def flag_suspect_edit(source, e: Edit) -> str | None:
    n = len(_tokens(source))
    replaced = e.end - e.start
    new_len = n - replaced + len(e.correction_tokens)
    if n == 0:
        return HALL_SUSPECT if new_len else None
    if replaced / n > 0.5:
        return HALL_SUSPECT
    ratio = new_len / n
    if ratio < 0.5 or ratio > 2.0:
        return HALL_SUSPECT
    return None

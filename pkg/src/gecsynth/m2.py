"""Reading and writing M2 gold annotation files.

A record looks like::

    S He go to school .
    A 1 2|||R:VERB:FORM|||goes|||REQUIRED|||-NONE-|||0

Canonical output orders annotators ascending and edits by (start, end) within
an annotator, writes deletions with an empty correction field, and emits a
``noop`` line for an annotator with no edits.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .errors import FormatError
from .text import TokenSequence

NOOP = "noop"
NONE = "-NONE-"


@dataclass(frozen=True)
class Edit:
    start: int
    end: int
    correction: str
    category: str = "OTHER"
    annotator: int = 0
    required: str = "REQUIRED"
    comment: str = NONE
    extra: tuple[str, ...] = ()

    def __post_init__(self):
        if not 0 <= self.start <= self.end:
            raise ValueError(f"bad span ({self.start}, {self.end})")
        if not self.category:
            raise ValueError("category must be non-empty")
        object.__setattr__(self, "extra", tuple(self.extra))

    @property
    def key(self) -> tuple[int, int, str]:
        return (self.start, self.end, self.correction)

    @property
    def correction_tokens(self) -> list[str]:
        return self.correction.split(" ") if self.correction else []

    @property
    def is_insertion(self) -> bool:
        return self.start == self.end

    @property
    def is_deletion(self) -> bool:
        return self.start < self.end and not self.correction


@dataclass(frozen=True)
class M2Record:
    source: TokenSequence
    annotations: Mapping[int, tuple[Edit, ...]] = field(default_factory=dict)

    def __post_init__(self):
        ann = {int(a): tuple(sorted(edits, key=lambda e: (e.start, e.end)))
               for a, edits in sorted(self.annotations.items())}
        if not ann:
            ann = {0: ()}
        object.__setattr__(self, "annotations", ann)

    @property
    def annotators(self) -> list[int]:
        return list(self.annotations)

    def edits(self, annotator: int | None = None) -> tuple[Edit, ...]:
        if annotator is None:
            annotator = self.annotators[0]
        return self.annotations[annotator]


def check_edits(edits: Iterable[Edit], n_tokens: int) -> str | None:
    """Return a problem description for invalid edit lists, else None.

    Edits must be in range and sorted; two edits overlap when one starts
    inside the other, or when both are insertions at the same index.
    """
    prev = None
    for e in edits:
        if e.end > n_tokens:
            return f"span ({e.start}, {e.end}) outside sentence of {n_tokens} tokens"
        if prev is not None:
            if (e.start, e.end) < (prev.start, prev.end):
                return "edits not sorted"
            if e.start < prev.end or (e.start == prev.start == prev.end == e.end):
                return f"overlapping edits ({prev.start}, {prev.end}) and ({e.start}, {e.end})"
        prev = e
    return None


def _parse_edit_line(line: str, lineno: int):
    body = line[2:]
    fields = body.split("|||")
    if len(fields) < 6:
        raise FormatError(f"expected at least 6 '|||' fields, got {len(fields)}", lineno)
    span = fields[0].split()
    if len(span) != 2:
        raise FormatError(f"bad span field {fields[0]!r}", lineno)
    try:
        start, end = int(span[0]), int(span[1])
        annotator = int(fields[5])
    except ValueError:
        raise FormatError("span and annotator must be integers", lineno) from None
    category = fields[1]
    if category == NOOP or (start, end) == (-1, -1):
        return annotator, None
    if not category:
        raise FormatError("empty category", lineno)
    if start < 0 or end < start:
        raise FormatError(f"bad span ({start}, {end})", lineno)
    correction = fields[2]
    if correction == NONE:
        correction = ""
    return annotator, Edit(start, end, correction, category, annotator,
                           fields[3], fields[4], tuple(fields[6:]))


def parse_m2(text: str) -> list[M2Record]:
    records: list[M2Record] = []
    source = None
    ann: dict[int, list[Edit]] = {}
    start_line = 0

    def close():
        nonlocal source, ann
        if source is None:
            return
        for a, edits in ann.items():
            edits.sort(key=lambda e: (e.start, e.end))
            problem = check_edits(edits, len(source))
            if problem:
                raise FormatError(f"annotator {a}: {problem}", start_line)
        records.append(M2Record(source, {a: tuple(es) for a, es in ann.items()}))
        source, ann = None, {}

    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    for lineno, line in enumerate(lines, 1):
        if line.endswith("\r"):
            line = line[:-1]
        if not line:
            close()
        elif line.startswith("S ") or line == "S":
            close()
            source = TokenSequence.from_tokens(line[2:].split(" ") if line[2:] else ())
            start_line = lineno
        elif line.startswith("A "):
            if source is None:
                raise FormatError("annotation line before any 'S' line", lineno)
            annotator, edit = _parse_edit_line(line, lineno)
            bucket = ann.setdefault(annotator, [])
            if edit is not None:
                if edit.end > len(source):
                    raise FormatError(
                        f"span ({edit.start}, {edit.end}) outside sentence of {len(source)} tokens", lineno)
                bucket.append(edit)
        else:
            raise FormatError(f"unrecognised line {line[:40]!r}", lineno)
    close()
    return records


def _edit_line(e: Edit, annotator: int) -> str:
    fields = [f"{e.start} {e.end}", e.category, e.correction, e.required, e.comment, str(annotator)]
    fields.extend(e.extra)
    return "A " + "|||".join(fields)


def serialize_m2(records: Iterable[M2Record]) -> str:
    out = []
    for rec in records:
        out.append("S " + " ".join(rec.source.tokens))
        for a, edits in rec.annotations.items():
            if not edits:
                out.append(f"A -1 -1|||{NOOP}|||{NONE}|||REQUIRED|||{NONE}|||{a}")
            for e in edits:
                out.append(_edit_line(e, a))
        out.append("")
    return "\n".join(out) + ("\n" if out else "")


def read_m2(path) -> list[M2Record]:
    from .text import _read_utf8
    return parse_m2(_read_utf8(path))


def write_m2(records: Iterable[M2Record], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(serialize_m2(records))


def corrected_tokens(record: M2Record, annotator: int | None = None) -> list[str]:
    """Source tokens with one annotator's edits applied."""
    tokens = list(record.source.tokens)
    for e in reversed(record.edits(annotator)):
        tokens[e.start:e.end] = e.correction_tokens
    return tokens

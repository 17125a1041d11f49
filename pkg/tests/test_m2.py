import pytest
from hypothesis import given
from hypothesis import strategies as st

from gecsynth.errors import FormatError
from gecsynth.m2 import Edit, M2Record, corrected_tokens, parse_m2, read_m2, serialize_m2, write_m2
from gecsynth.text import TokenSequence

WORD = st.sampled_from(["a", "b", "He", "go", ",", ".", "kõik", "„", "x-y"])
CATS = st.sampled_from(["R:SPELL", "M:PUNCT", "U:PUNCT", "R:VERB:FORM", "R:WO", "OTHER"])


@st.composite
def records(draw):
    tokens = draw(st.lists(WORD, max_size=8))
    n = len(tokens)
    annotations = {}
    for a in sorted(draw(st.sets(st.integers(0, 3), min_size=1, max_size=3))):
        edits, pos, last_ins = [], 0, None
        while pos <= n and draw(st.booleans()):
            start = draw(st.integers(pos, n))
            end = draw(st.integers(start, min(n, start + 3)))
            if start == end == last_ins:
                break
            corr = " ".join(draw(st.lists(WORD, max_size=3, min_size=1 if start == end else 0)))
            extra = tuple(draw(st.lists(st.sampled_from(["x", "y=1"]), max_size=2)))
            edits.append(Edit(start, end, corr, draw(CATS), a,
                              draw(st.sampled_from(["REQUIRED", "OPTIONAL"])), "-NONE-", extra))
            last_ins = end if start == end else None
            pos = end
        annotations[a] = tuple(edits)
    return M2Record(TokenSequence.from_tokens(tokens), annotations)


def test_parse_single_edit():
    recs = parse_m2("S He go\nA 1 2|||R:VERB:FORM|||goes|||REQUIRED|||-NONE-|||0\n\n")
    assert len(recs) == 1
    (e,) = recs[0].edits()
    assert (e.start, e.end, e.correction, e.category, e.annotator) == (1, 2, "goes", "R:VERB:FORM", 0)


def test_parse_noop():
    (r,) = parse_m2("S Fine .\nA -1 -1|||noop|||-NONE-|||REQUIRED|||-NONE-|||0\n\n")
    assert r.annotations == {0: ()}


def test_empty_file():
    assert parse_m2("") == []
    assert serialize_m2([]) == ""


def test_zero_edit_record_emits_noop():
    text = serialize_m2([M2Record(TokenSequence.from_tokens(["Fine", "."]), {})])
    assert text == "S Fine .\nA -1 -1|||noop|||-NONE-|||REQUIRED|||-NONE-|||0\n\n"


def test_two_annotators_sorted():
    rec = M2Record(TokenSequence.from_tokens("a b c".split()), {
        1: (Edit(2, 3, "C", "R:CASE", 1), Edit(0, 1, "A", "R:CASE", 1)),
        0: (Edit(1, 2, "", "U:OTHER", 0),),
    })
    lines = serialize_m2([rec]).splitlines()
    assert lines[1].startswith("A 1 2|||U:OTHER") and lines[1].endswith("|||0")
    assert lines[2].startswith("A 0 1") and lines[3].startswith("A 2 3")


def test_deletion_none_marker_canonicalized():
    (r,) = parse_m2("S a b\nA 1 2|||U:OTHER|||-NONE-|||REQUIRED|||-NONE-|||0\n\n")
    assert r.edits()[0].is_deletion
    assert "|||U:OTHER||||||REQUIRED" in serialize_m2([r])


def test_extra_fields_preserved():
    text = "S a\nA 0 1|||R:OTHER|||b|||REQUIRED|||-NONE-|||0|||foo|||bar\n\n"
    assert serialize_m2(parse_m2(text)) == text


@pytest.mark.parametrize("text,line", [
    ("S a b\nA 0 3|||R:X|||c|||REQUIRED|||-NONE-|||0\n\n", 2),
    ("S a b\nA 0 x|||R:X|||c|||REQUIRED|||-NONE-|||0\n\n", 2),
    ("S a b\nA 0 1|||R:X|||c\n\n", 2),
    ("A 0 1|||R:X|||c|||REQUIRED|||-NONE-|||0\n", 1),
    ("S a\n\nhello\n", 3),
    ("S a b c\nA 0 2|||R:X|||c|||REQUIRED|||-NONE-|||0\nA 1 3|||R:X|||d|||REQUIRED|||-NONE-|||0\n\n", 1),
])
def test_format_errors_carry_line(text, line):
    with pytest.raises(FormatError) as ei:
        parse_m2(text)
    assert ei.value.line == line
    assert f"line {line}" in str(ei.value)


def test_overlapping_insertions_rejected():
    with pytest.raises(FormatError):
        parse_m2("S a\nA 1 1|||M:X|||b|||REQUIRED|||-NONE-|||0\nA 1 1|||M:X|||c|||REQUIRED|||-NONE-|||0\n\n")


def test_insertion_then_replacement_at_same_index_allowed():
    text = "S a b\nA 1 1|||M:X|||z|||REQUIRED|||-NONE-|||0\nA 1 2|||R:X|||c|||REQUIRED|||-NONE-|||0\n\n"
    (r,) = parse_m2(text)
    assert corrected_tokens(r) == ["a", "z", "c"]


@given(st.lists(records(), max_size=5))
def test_parse_serialize_identity(recs):
    assert parse_m2(serialize_m2(recs)) == recs


@given(st.lists(records(), max_size=5))
def test_serialize_parse_idempotent(recs):
    text = serialize_m2(recs)
    assert serialize_m2(parse_m2(text)) == text


def test_file_io(tmp_path):
    recs = parse_m2("S a b\nA 0 1|||R:X|||c|||REQUIRED|||-NONE-|||0\n\n")
    write_m2(recs, tmp_path / "x.m2")
    assert read_m2(tmp_path / "x.m2") == recs

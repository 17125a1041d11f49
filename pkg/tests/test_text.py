import pytest
from hypothesis import given
from hypothesis import strategies as st

from gecsynth.errors import ControlCharacterError, CorpusLoadError, SampleTooLarge
from gecsynth.text import (
    PUNCT_CHARS, SAMPLE_PRESETS, Corpus, TokenSequence, char_distance, detokenize, load_corpus,
    load_lines, load_parallel, normalize, sample_corpus, save_corpus, save_parallel, tokenize,
)
from oracles import osa_distance

# printable text with plenty of punctuation and odd spacing
TEXT = st.text(
    alphabet=st.sampled_from(list("abcXYZ äõ-'\".,;:!?()«»„“”—…\t  ") + ["ü", "1", "ß"]),
    max_size=60,
)


def test_tokenize_examples():
    ts = tokenize("He goes.")
    assert ts.tokens == ("He", "goes", ".")
    assert ts.spacing == (False, True, False)
    assert tokenize("").tokens == ()
    assert tokenize("a,b").tokens == ("a", ",", "b")
    assert tokenize("well-known").tokens == ("well-known",)
    assert tokenize("don't").tokens == ("don", "'", "t")


def test_every_punct_char_splits():
    for ch in PUNCT_CHARS:
        assert tokenize(f"x{ch}y").tokens == ("x", ch, "y")


@pytest.mark.parametrize("bad", ["a\x00b", "a\x1bb", "\x07", "x\x7f", "line\nbreak"])
def test_control_characters_rejected(bad):
    with pytest.raises(ControlCharacterError):
        tokenize(bad)


def test_tab_is_whitespace():
    assert tokenize("a\tb").tokens == ("a", "b")


def test_normalize_examples():
    assert normalize("a  b ") == "a b"
    assert normalize("„x“") == '"x"'
    assert normalize("a – b") == "a — b"
    assert normalize("it’s") == "it's"
    assert normalize("x‐y") == "x-y"


@given(TEXT)
def test_round_trip_on_normalized_text(s):
    n = normalize(s)
    assert detokenize(tokenize(n)) == n


@given(TEXT)
def test_normalize_idempotent(s):
    assert normalize(normalize(s)) == normalize(s)


@given(TEXT)
def test_tokens_have_no_whitespace(s):
    for tok in tokenize(s).tokens:
        assert tok and not any(ch.isspace() for ch in tok)


def test_token_sequence_equality_ignores_layout():
    a = TokenSequence(("a", "b"), (False, False))
    b = TokenSequence(("a", "b"), (False, True))
    assert a == b and hash(a) == hash(b)
    with pytest.raises(ValueError):
        TokenSequence(("a",), (False, True))


def test_from_tokens_is_space_separated():
    assert TokenSequence.from_tokens(["a", ",", "b"]).text() == "a , b"


@given(st.text(alphabet="abcd", max_size=7), st.text(alphabet="abcd", max_size=7))
def test_char_distance_matches_table_oracle(a, b):
    assert char_distance(a, b) == osa_distance(a, b)


def test_sample_presets():
    assert SAMPLE_PRESETS == {"1M": 1_000_000, "100k": 100_000}


def test_sample_is_deterministic_permutation():
    c = Corpus(tuple(f"line {i}" for i in range(50)))
    full = sample_corpus(c, 50, seed=1)
    assert sorted(full.lines) == sorted(c.lines)
    assert sample_corpus(c, 20, 3).lines == sample_corpus(c, 20, 3).lines
    assert len(set(sample_corpus(c, 20, 3).lines)) == 20


def test_sample_differs_by_seed():
    c = Corpus(tuple(str(i) for i in range(10_000)))
    assert sample_corpus(c, 100, 1).lines != sample_corpus(c, 100, 2).lines


def test_sample_prefix_consistency():
    # the key of each line depends on (seed, index) only
    c = Corpus(tuple(str(i) for i in range(1000)))
    assert sample_corpus(c, 10, 5).lines == sample_corpus(c, 50, 5).lines[:10]


def test_sample_too_large():
    with pytest.raises(SampleTooLarge):
        sample_corpus(Corpus(("a",)), 2, 0)


def test_sample_roughly_uniform():
    c = Corpus(tuple(str(i) for i in range(10)))
    hits = [0] * 10
    for seed in range(2000):
        for line in sample_corpus(c, 3, seed).lines:
            hits[int(line)] += 1
    # each line expected 600 times; 5-sigma band
    assert all(480 < h < 720 for h in hits), hits


def test_corpus_io(tmp_path):
    p = tmp_path / "c.txt"
    p.write_bytes("a b\n\n  \nc d\r\n".encode())
    c = load_corpus(p)
    assert c.lines == ("a b", "c d")
    assert load_lines(p) == ["a b", "", "  ", "c d"]
    out = tmp_path / "o.txt"
    save_corpus(c, out)
    assert out.read_bytes() == b"a b\nc d\n"
    assert Corpus(("a b", "c d")).fingerprint() == c.fingerprint()


def test_invalid_utf8(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_bytes(b"ok\n\xff\xfe\n")
    with pytest.raises(CorpusLoadError):
        load_corpus(p)


def test_parallel_io(tmp_path):
    p = tmp_path / "p.tsv"
    save_parallel([("a", "b"), ("c d", "e")], p)
    assert load_parallel(p) == [("a", "b"), ("c d", "e")]
    p.write_text("only one column\n", encoding="utf-8")
    with pytest.raises(CorpusLoadError):
        load_parallel(p)

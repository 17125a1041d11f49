import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from gecsynth.errors import AuthError, EndpointError, SlotCountMismatch
from gecsynth.mockserver import MockChatServer, prompt_input, swap_letters
from gecsynth.remote import (
    BUILTIN_TEMPLATES, ChatClient, Journal, PromptTemplate, RemoteConfig, generate_remote,
    pick_examples, post_process, post_process_detail, render_prompt, request_key,
)

EXAMPLES = [(f"Parandatud lause {i} .", f"Vigane lause {i} .") for i in range(4)]
POOL = [(f"vigane {i} lause", f"õige {i} lause") for i in range(10)]
SENT = "See on üks lihtne eesti keele lause ."


def cfg(url="http://127.0.0.1:9/v1", **kw):
    kw.setdefault("api_key_env", "GECSYNTH_TEST_KEY")
    return RemoteConfig(endpoint=url, model="m", **kw)


def no_sleep(_):
    pass


def test_render_prompt_order():
    t = PromptTemplate.load("et")
    text = render_prompt(t, EXAMPLES, "Sisend siia .")
    expected = [t.instruction]
    for correct, wrong in EXAMPLES:
        expected += [f"Sisendtekst: {correct}", f"Väljundtekst: {wrong}"]
    expected += ["Sisendtekst: Sisend siia .", "Väljundtekst:"]
    assert [ln for ln in text.splitlines() if ln] == expected
    assert prompt_input(text) == "Sisend siia ."


def test_slot_count_mismatch():
    with pytest.raises(SlotCountMismatch):
        render_prompt(PromptTemplate.load("et"), EXAMPLES[:3], "x")


@pytest.mark.parametrize("name", BUILTIN_TEMPLATES)
def test_builtin_templates_load(name):
    t = PromptTemplate.load(name)
    assert t.n_examples == 4 and t.input_label and t.output_label and t.instruction
    assert t.language == name


def test_custom_template_file(tmp_path):
    p = tmp_path / "t.tmpl"
    p.write_text("input_label = In\noutput_label = Out\nexamples = 1\n---\nAdd errors.\n", encoding="utf-8")
    t = PromptTemplate.load(str(p))
    assert render_prompt(t, EXAMPLES[:1], "z") == \
        "Add errors.\n\nIn: Parandatud lause 0 .\nOut: Vigane lause 0 .\n\nIn: z\nOut:"
    p.write_text("no header", encoding="utf-8")
    with pytest.raises(ValueError):
        PromptTemplate.load(str(p))


def test_pick_examples_deterministic():
    a = pick_examples(POOL, 4, seed=1, index=3)
    assert a == pick_examples(POOL, 4, seed=1, index=3)
    assert len(set(a)) == 4 and all(c.startswith("õige") for c, _ in a)
    with pytest.raises(ValueError):
        pick_examples(POOL[:2], 4, 0, 0)


@pytest.mark.parametrize("output,expected,reason", [
    ("", SENT, "empty"),
    (None, SENT, "empty"),
    ("See on üks lihtne eesti keele lauze .", "See on üks lihtne eesti keele lauze .", None),
    ("Väljundtekst: See on uks lihtne eesti keele lause .", "See on uks lihtne eesti keele lause .", None),
    ('"See on üks lihne eesti keele lause ."', "See on üks lihne eesti keele lause .", None),
    (" ".join([SENT] * 4), SENT, "length"),
    ("See .", SENT, "length"),
    ("I'm sorry, I cannot help with that.", SENT, "refusal"),
    ("See on üks\nlihtne eesti keele lause .\nSelgitus: ...", SENT, "length"),
])
def test_post_process_cases(output, expected, reason):
    assert post_process_detail(SENT, output) == (expected, reason)


def test_length_bounds_are_inclusive():
    src = " ".join(["a"] * 10)
    assert post_process(src, " ".join(["b"] * 15)) == " ".join(["b"] * 15)
    assert post_process(src, " ".join(["b"] * 16)) == src
    assert post_process(src, " ".join(["b"] * 5)) == " ".join(["b"] * 5)
    assert post_process(src, " ".join(["b"] * 4)) == src


def test_label_present_in_input_is_kept():
    src = "Väljundtekst: on sõna ."
    assert post_process(src, "Väljundtekst: on sona .") == "Väljundtekst: on sona ."


@given(st.lists(st.sampled_from(list("abc .,\"'„“") + ["Väljundtekst:", "Sisendtekst:", "\n"]), max_size=40).map("".join))
def test_post_process_idempotent(out):
    once = post_process(SENT, out)
    assert post_process(SENT, once) == once


def test_api_key_comes_from_environment(monkeypatch):
    monkeypatch.setenv("GECSYNTH_TEST_KEY", "sekret")
    c = ChatClient(cfg())
    assert c._http.headers["Authorization"] == "Bearer sekret"
    c.close()
    monkeypatch.delenv("GECSYNTH_TEST_KEY")
    c = ChatClient(cfg())
    assert "Authorization" not in c._http.headers
    c.close()


def test_top_k_omitted_when_zero():
    c = ChatClient(cfg(top_k=0))
    assert "top_k" not in c.body("p")
    c.close()
    c = ChatClient(cfg(top_p=0.9))
    assert c.body("p")["top_k"] == 50 and c.body("p")["top_p"] == 0.9
    c.close()


def test_config_validation():
    for kw in ({"temperature": -1}, {"concurrency": 0}, {"max_attempts": 0}):
        with pytest.raises(ValueError):
            cfg(**kw)


def test_request_key_depends_on_sampling():
    assert request_key(cfg(), "p") != request_key(cfg(temperature=0.5), "p")
    assert request_key(cfg(), "p") == request_key(cfg(concurrency=9), "p")


def test_auth_failure_is_fatal():
    with MockChatServer(lambda s, r: 401) as srv:
        c = ChatClient(cfg(srv.url), sleep=no_sleep)
        with pytest.raises(AuthError):
            c.complete("Sisendtekst: x\nVäljundtekst:")
        c.close()
        assert len(srv.requests) == 1
        with pytest.raises(AuthError):
            generate_remote(["a b c"], cfg(srv.url), PromptTemplate.load("et"), POOL, 0,
                            client=ChatClient(cfg(srv.url), sleep=no_sleep))


def test_rate_limit_retried():
    calls = []

    def responder(sentence, req):
        calls.append(sentence)
        return 429 if len(calls) < 3 else swap_letters(sentence)

    slept = []
    with MockChatServer(responder) as srv:
        c = ChatClient(cfg(srv.url, max_attempts=5, backoff_base=0.25), sleep=slept.append)
        assert c.complete("Sisendtekst: tere maailm\nVäljundtekst:") == "tere amailm"
        c.close()
    assert slept == [0.25, 0.5]


def test_gives_up_after_max_attempts():
    with MockChatServer(lambda s, r: 503) as srv:
        c = ChatClient(cfg(srv.url, max_attempts=3), sleep=no_sleep)
        with pytest.raises(EndpointError):
            c.complete("x")
        c.close()
        assert len(srv.requests) == 3


def test_journal_tolerates_torn_line(tmp_path):
    j = Journal(tmp_path)
    j.append("k1", "one")
    with open(j.path, "a", encoding="utf-8") as fh:
        fh.write('{"key": "k2", "resp')
    j2 = Journal(tmp_path)
    assert j2.get("k1") == "one" and "k2" not in j2
    j2.append("k3", "three")
    assert Journal(tmp_path).get("k3") == "three"
    for line in j.path.read_text(encoding="utf-8").splitlines()[2:]:
        json.loads(line)


def test_generate_resumes_from_journal(tmp_path):
    lines = [f"lause number {i} siin" for i in range(6)]
    t = PromptTemplate.load("et")
    with MockChatServer() as srv:
        c = cfg(srv.url, concurrency=2)
        first = generate_remote(lines, c, t, POOL, 3, journal_dir=tmp_path)
        assert first.requested == 6 and len(srv.requests) == 6
        second = generate_remote(lines, c, t, POOL, 3, journal_dir=tmp_path)
        assert second.requested == 0 and len(srv.requests) == 6
    assert first.pairs == second.pairs
    assert [clean for _, clean in first.pairs] == lines
    assert all(noised != clean for noised, clean in first.pairs)


def test_failed_sentences_keep_clean_text():
    with MockChatServer(lambda s, r: 500 if "1" in s else swap_letters(s)) as srv:
        c = cfg(srv.url, max_attempts=2)
        res = generate_remote(["lause 0 siin", "lause 1 siin"], c, PromptTemplate.load("et"), POOL, 0,
                              client=ChatClient(c, sleep=no_sleep))
    assert res.pairs[1] == ("lause 1 siin", "lause 1 siin")
    assert res.flags[0]["reason"] == "endpoint-error" and res.flags[0]["index"] == 1

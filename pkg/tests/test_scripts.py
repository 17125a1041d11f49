import importlib
import sys
from pathlib import Path

import pytest

SCRIPTS = Path(__file__).resolve().parent.parent / "scripts"


@pytest.fixture(autouse=True)
def scripts_on_path(monkeypatch):
    monkeypatch.syspath_prepend(str(SCRIPTS))


def load(name):
    sys.modules.pop(name, None)
    return importlib.import_module(name)


def test_config_overrides():
    mod = load("noise_rate")
    from _config import parse_config
    cfg, as_json = parse_config(mod.Config, argv=["--sentences", "7", "--p-words", "0.1", "0.2", "--json"])
    assert cfg.sentences == 7 and cfg.p_words == [0.1, 0.2] and as_json


def test_noise_rate_script():
    rows = load("noise_rate").run(load("noise_rate").Config(sentences=200, p_words=[0.0, 0.5]))
    assert rows[0]["rate"] == "0.0000" and 0.4 < float(rows[1]["rate"]) < 0.6


def test_channel_fidelity_script():
    mod = load("channel_fidelity")
    rows = mod.run(mod.Config(gold_sentences=300, clean_sentences=500))
    assert rows[-1]["category"] == "all" and float(rows[-1]["recovered"]) > 0.9


def test_bootstrap_timing_script():
    mod = load("bootstrap_timing")
    (row,) = mod.run(mod.Config(sizes=[50], samples=200))
    assert row["samples"] == 200


def test_demo_pipeline_script(tmp_path, capsys):
    mod = load("demo_pipeline")
    mod.main(mod.Config(out=str(tmp_path / "demo"), clean_sentences=300, gold_sentences=100, sample=50, remote=True))
    out = capsys.readouterr().out
    assert "perfect_report   P=1.0000 R=1.0000" in out
    assert (tmp_path / "demo" / "run" / "remote.tsv").exists()

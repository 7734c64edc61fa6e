import json

import pytest

from cli.main import main
from ep.formats import read_emissions, read_matrix_dump, write_emissions, write_lexicon
from lab.models import default_alphabet
from lab.rng import SplitMix64
from lab.synth import random_emissions


@pytest.fixture
def eos_file(tmp_path, eos_frame):
    path = tmp_path / "eos.json"
    write_emissions(eos_frame, path)
    return path


@pytest.fixture
def dove_file(tmp_path, dove):
    path = tmp_path / "dove.json"
    write_emissions(dove, path)
    return path


def test_score_prints_twelve_digits(eos_file, capsys):
    assert main(["score", str(eos_file), ""]) == 0
    out = capsys.readouterr().out
    assert "ep=0.350000000000" in out
    assert out.startswith("log_ep=-1.04982212")


def test_score_unknown_symbol(eos_file, capsys):
    assert main(["score", str(eos_file), "AxA"]) == 2
    assert "'x'" in capsys.readouterr().err


def test_score_missing_file(tmp_path, capsys):
    assert main(["score", str(tmp_path / "nope.json"), "A"]) == 2
    assert "error:" in capsys.readouterr().err


def test_malformed_emission_file(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"alphabet": ["A", "#"], "frames": [{"y": [0.5, 0.6], "r": [1, 0, 0], "ins": [0.5, 0.5]}], "final_ins": [0.5, 0.5]}))
    assert main(["score", str(path), "A"]) == 2
    path.write_text("{not json")
    assert main(["score", str(path), "A"]) == 2


def test_matrix_writes_dump(dove_file, tmp_path):
    out = tmp_path / "m.csv"
    assert main(["matrix", str(dove_file), "DOVE", "--out", str(out)]) == 0
    grid, ops = read_matrix_dump(out)
    assert grid.shape == (6, 7)
    assert [op.kind.value for op in ops].count("insert") == 1


def test_decode_with_and_without_lexicon(dove_file, tmp_path, capsys):
    assert main(["decode", str(dove_file)]) == 0
    assert "prediction=DVE# " in capsys.readouterr().out

    lex = tmp_path / "words.txt"
    write_lexicon(["dove", "do"], lex)
    assert main(["decode", str(dove_file), "--lexicon", str(lex), "--lambda", "0.9", "--fold-case"]) == 0
    out = capsys.readouterr().out
    assert "prediction=DOVE# " in out
    assert "source=lexicon" in out


def test_decode_rejects_lambda_before_reading(tmp_path, capsys):
    assert main(["decode", str(tmp_path / "missing.json"), "--lambda", "1.5"]) == 2
    assert "lambda" in capsys.readouterr().err


def test_bench_lexicon(tmp_path, capsys):
    em = random_emissions(SplitMix64(1), default_alphabet(6), 8, 0.01)
    em_path, lex_path = tmp_path / "em.json", tmp_path / "lex.txt"
    write_emissions(em, em_path)
    assert main(["gen-lexicon", "--emissions", str(em_path), "--count", "200", "--seed", "3", "--out", str(lex_path)]) == 0
    assert main(["bench-lexicon", str(em_path), str(lex_path), "--repeat", "1"]) == 0
    out = capsys.readouterr().out
    assert "speedup=" in out
    assert main(["bench-lexicon", str(em_path), str(lex_path), "--repeat", "0"]) == 2


def test_generators_are_deterministic(tmp_path):
    a, b = tmp_path / "a.tsv", tmp_path / "b.tsv"
    for out in (a, b):
        assert main(["gen", "--seed", "7", "--count", "20", "--p-drop", "0.15", "--p-dup", "0.15", "--out", str(out)]) == 0
    assert a.read_bytes() == b.read_bytes()

    e1, e2 = tmp_path / "e1.json", tmp_path / "e2.json"
    for out in (e1, e2):
        assert main(["gen-emissions", "--seed", "2", "--frames", "4", "--alphabet-size", "5", "--out", str(out)]) == 0
    assert e1.read_bytes() == e2.read_bytes()
    assert read_emissions(e1).n == 4


def test_gen_requires_seed(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["gen", "--out", str(tmp_path / "x.tsv")])
    assert exc.value.code == 2


def test_invalid_synth_flags(tmp_path, capsys):
    assert main(["gen", "--seed", "1", "--p-drop", "0.9", "--out", str(tmp_path / "x.tsv")]) == 2
    assert "p_drop" in capsys.readouterr().err


def test_train_eval_round_trip(tmp_path, capsys):
    corpus = tmp_path / "c.tsv"
    assert main(["gen", "--seed", "1", "--count", "20", "--alphabet-size", "3", "--out", str(corpus)]) == 0
    prefix = tmp_path / "run"
    assert main(["train", "--corpus", str(corpus), "--alphabet-size", "3", "--epochs", "1", "--seed", "0", "--out", str(prefix)]) == 0
    report = json.loads((tmp_path / "run.json").read_text())
    assert report["loss_kind"] == "ep" and report["epochs"] == 1
    assert report["alphabet"] == ["a", "b", "c", "#"]

    assert main(["eval", "--model", str(tmp_path / "run.npz"), "--corpus", str(corpus)]) == 0
    assert "accuracy=" in capsys.readouterr().out


def test_train_rejects_corpus_from_a_smaller_alphabet(tmp_path, capsys):
    corpus = tmp_path / "c.tsv"
    assert main(["gen", "--seed", "1", "--count", "10", "--alphabet-size", "3", "--out", str(corpus)]) == 0
    assert main(["train", "--corpus", str(corpus), "--epochs", "1", "--seed", "0", "--out", str(tmp_path / "run")]) == 2
    assert "narrower" in capsys.readouterr().err
    assert not (tmp_path / "run.npz").exists()


def test_gradcheck_passes(capsys):
    assert main(["gradcheck", "--instances", "5", "--seed", "3"]) == 0
    assert "max_rel_err=" in capsys.readouterr().out


def test_oracle_matches_dp(eos_file, capsys):
    assert main(["oracle", str(eos_file), ""]) == 0
    out = capsys.readouterr().out
    assert "paths=3" in out
    assert "enumerated=0.350000000000" in out


def test_bad_configuration(eos_file, monkeypatch, capsys):
    monkeypatch.setenv("EP_LOG_LEVEL", "LOUD")
    assert main(["score", str(eos_file), ""]) == 2
    assert "EP_LOG_LEVEL" in capsys.readouterr().err


def test_score_without_frames(tmp_path, capsys):
    path = tmp_path / "none.json"
    path.write_text(json.dumps({"alphabet": ["A", "#"], "frames": [], "final_ins": [0.6, 0.4]}))
    assert main(["score", str(path), "#"]) == 0
    assert "ep=0.400000000000" in capsys.readouterr().out

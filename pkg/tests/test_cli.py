import json

import pytest

from seqlab.cli import main
from seqlab.corpus import load_conll


@pytest.fixture
def data(tmp_path):
    assert main(["synth", "--profile", "longdep", "--sentences", "30", "--seed", "1",
                 "--out", str(tmp_path / "train.conll")]) == 0
    assert main(["synth", "--profile", "longdep", "--sentences", "10", "--seed", "2",
                 "--out", str(tmp_path / "test.conll")]) == 0
    return tmp_path


def train(tmp_path, arch, out, *extra):
    return main(["train", "--arch", arch, "--train", str(tmp_path / "train.conll"), "--hidden", "4", "--dim", "4",
                 "--epochs", "1", "--out", str(out), *extra])


def test_evaluate_identical_files(data, capsys):
    gold = str(data / "test.conll")
    assert main(["evaluate", "--gold", gold, "--pred", gold, "--json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["precision"] == doc["recall"] == doc["f1"] == 1.0
    assert {"precision", "recall", "f1", "per_label", "config"} <= set(doc)


def test_evaluate_text_report(data, capsys):
    gold = str(data / "test.conll")
    assert main(["evaluate", "--gold", gold, "--pred", gold]) == 0
    assert "micro" in capsys.readouterr().out


def test_gradcheck_lstm_seed_7(capsys):
    assert main(["gradcheck", "--arch", "lstm", "--seed", "7", "--seeds", "1"]) == 0
    assert "max_rel_error" in capsys.readouterr().out


def test_unknown_flag_is_usage_error(capsys):
    assert main(["evaluate", "--frobnicate"]) == 1
    assert "usage" in capsys.readouterr().err
    assert main([]) == 1
    assert main(["no-such-command"]) == 1


@pytest.mark.parametrize("arch", ["rnn", "lstm", "gru", "crf", "crf-nocontext"])
def test_train_predict_round_trip(data, arch):
    model = data / f"{arch}.json"
    assert train(data, arch, model) == 0
    assert model.exists() and (data / f"{arch}.json.bin").exists()
    manifest = json.loads((data / f"{arch}.json.run.json").read_text())
    assert manifest["config"]["arch"] == arch and len(manifest["inputs"]["train"]["sha256"]) == 64
    assert "version" in manifest and manifest["seed"] == 0
    out = data / f"{arch}.pred"
    assert main(["predict", "--model", str(model), "--input", str(data / "test.conll"), "--out", str(out)]) == 0
    pred, gold = load_conll(out), load_conll(data / "test.conll")
    assert [s.tokens for d in pred for s in d.sentences] == [s.tokens for d in gold for s in d.sentences]
    assert main(["evaluate", "--gold", str(data / "test.conll"), "--pred", str(out)]) == 0


def test_document_mode_predict_keeps_sentence_boundaries(data):
    model = data / "doc.json"
    assert train(data, "gru", model, "--seq-unit", "document") == 0
    out = data / "doc.pred"
    assert main(["predict", "--model", str(model), "--input", str(data / "test.conll"), "--out", str(out)]) == 0
    pred, gold = load_conll(out), load_conll(data / "test.conll")
    assert [len(s) for d in pred for s in d.sentences] == [len(s) for d in gold for s in d.sentences]


def test_predict_accepts_untagged_input(data, tmp_path):
    assert train(data, "crf", data / "m.json") == 0
    (tmp_path / "raw.conll").write_text("take\naspirin\n")
    assert main(["predict", "--model", str(data / "m.json"), "--input", str(tmp_path / "raw.conll"),
                 "--out", str(tmp_path / "raw.pred")]) == 0
    assert len(load_conll(tmp_path / "raw.pred")[0].sentences[0]) == 2


def test_seed_from_environment(data, monkeypatch):
    monkeypatch.setenv("SEQLAB_SEED", "17")
    assert train(data, "crf", data / "s.json") == 0
    assert json.loads((data / "s.json.run.json").read_text())["seed"] == 17
    monkeypatch.setenv("SEQLAB_SEED", "x")
    assert train(data, "crf", data / "s.json") == 1


def test_crossval(data, capsys):
    assert main(["crossval", "--arch", "crf-nocontext", "--data", str(data / "train.conll"), "--folds", "3",
                 "--epochs", "1", "--dim", "4", "--json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["config"]["folds"] == 3 and doc["config"]["split"] == "document"


def test_crossval_parallel_matches_serial(data, capsys):
    args = ["crossval", "--arch", "crf", "--data", str(data / "train.conll"), "--folds", "3", "--epochs", "1",
            "--dim", "4", "--json"]
    assert main(args) == 0
    serial = capsys.readouterr().out
    assert main(args + ["--jobs", "2"]) == 0
    assert capsys.readouterr().out == serial


def test_data_errors_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.conll"
    bad.write_text("foo bar\tO\n")
    assert main(["train", "--arch", "crf", "--train", str(bad), "--out", str(tmp_path / "m.json")]) == 2
    assert "bad.conll:1" in capsys.readouterr().err
    assert main(["evaluate", "--gold", str(tmp_path / "missing"), "--pred", str(bad)]) == 2


def test_numeric_failure_exit_3(data):
    assert train(data, "crf", data / "m.json", "--lr", "1e300", "--epochs", "3") == 3


def test_embed_train(tmp_path):
    corpus = tmp_path / "c.txt"
    corpus.write_text("the patient took aspirin\nthe patient took heparin\n" * 5)
    out = tmp_path / "v.txt"
    assert main(["embed-train", "--corpus", str(corpus), "--dim", "5", "--window", "2", "--epochs", "1",
                 "--seed", "3", "--out", str(out)]) == 0
    assert out.read_text().splitlines()[0] == "5 5"
    assert train_with_embeddings(tmp_path, out) == 0


def train_with_embeddings(tmp_path, vectors):
    main(["synth", "--profile", "local", "--sentences", "10", "--seed", "0", "--out", str(tmp_path / "l.conll")])
    return main(["train", "--arch", "lstm", "--train", str(tmp_path / "l.conll"), "--embeddings", str(vectors),
                 "--hidden", "3", "--epochs", "1", "--out", str(tmp_path / "e.json")])

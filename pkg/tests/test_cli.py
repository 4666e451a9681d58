"""Command-line surface: generation, vocab, training, reports."""

import json

from newsprism.cli import main
from newsprism.corpus import load_corpus
from newsprism.stats import Demographics, SurveyRecord, save_surveys


def test_corpus_gen_and_vocab(tmp_path, capsys):
    out = tmp_path / "data"
    assert main(["corpus", "gen", "--seed", "7", "--out", str(out)]) == 0
    arts, coms = load_corpus(out / "corpus.jsonl")
    assert len(arts) == 120 and len(coms) == 480
    vocab_path = tmp_path / "vocab.json"
    assert (
        main(["corpus", "vocab", "--corpus", str(out / "corpus.jsonl"), "--min-freq", "2",
              "--out", str(vocab_path)])
        == 0
    )
    vocab = json.loads(vocab_path.read_text())
    assert vocab["tokens"][:2] == ["<pad>", "<unk>"]
    assert vocab["min_freq"] == 2


def test_corpus_gen_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    main(["corpus", "gen", "--seed", "3", "--out", str(a)])
    main(["corpus", "gen", "--seed", "3", "--out", str(b)])
    assert (a / "corpus.jsonl").read_bytes() == (b / "corpus.jsonl").read_bytes()


def test_stance_train_predict_round_trip(tmp_path, capsys):
    out = tmp_path / "data"
    main(["corpus", "gen", "--seed", "11", "--out", str(out)])
    model_path = tmp_path / "model.json"
    assert (
        main(["stance", "train", "--corpus", str(out / "corpus.jsonl"), "--d", "8",
              "--epochs", "3", "--out", str(model_path)])
        == 0
    )
    capsys.readouterr()
    predicted = tmp_path / "predicted.jsonl"
    assert (
        main(["stance", "predict", "--article", str(out / "corpus.jsonl"), "--model",
              str(model_path), "--out", str(predicted)])
        == 0
    )
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 120
    first = json.loads(lines[0])
    assert set(first) == {"id", "p", "stance", "strength", "extremeness"}
    arts, _ = load_corpus(predicted)
    assert all(a.prediction is not None for a in arts)


def test_check_grad_commands(capsys):
    assert main(["kg", "check-grad", "--method", "mode", "--trials", "2"]) == 0
    assert "OK" in capsys.readouterr().out
    assert main(["stance", "check-grad", "--trials", "1", "--d", "6"]) == 0
    assert "OK" in capsys.readouterr().out


def test_study_report_cli(tmp_path, capsys):
    records = []
    for i in range(4):
        demo = Demographics(
            gender="male",
            age_band="30-39",
            political_interest=3,
            political_stance=2 + i % 3,
            media_usage=3,
        )
        records.append(
            SurveyRecord(f"p{i}", "pre", (2, 3, 2, 3, 2), demographics=demo)
        )
        records.append(SurveyRecord(f"p{i}", "post", (4, 3, 4, 4, 3)))
    surveys = tmp_path / "surveys.jsonl"
    save_surveys(records, surveys)
    json_out = tmp_path / "report.json"
    assert (
        main(["study", "report", "--surveys", str(surveys), "--json-out", str(json_out)]) == 0
    )
    text = capsys.readouterr().out
    assert "bonferroni m=6" in text
    report = json.loads(json_out.read_text())
    assert report["n_pairs"] == 4
    assert len(report["questions"]) == 5

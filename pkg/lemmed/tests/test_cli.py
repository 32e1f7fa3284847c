"""
Tests for the command-line interface.
"""

import os

import pytest

from lemmed.cli import EXIT_DATA, EXIT_OK, EXIT_USAGE, main
from lemmed.conllu import read_corpus, write_corpus
from lemmed.model import load_checkpoint
from lemmed.synthetic import make_synthetic_corpus

TINY_MODEL = ["--embedding-size", "8", "--hidden-units", "8", "--layers", "1", "--dropout", "0"]


def test_stats(bats_path, capsys):
    assert main(["stats", bats_path, "--reference", bats_path]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines == ["sentences 1", "tokens 3", "grammeme-form 2.00", "oov_rate 0.000", "oov_tokens 0"]


def test_missing_corpus_is_a_data_error(tmp_path):
    assert main(["stats", str(tmp_path / "missing.tsv")]) == EXIT_DATA


def test_bad_corpus_is_a_data_error(tmp_path):
    path = tmp_path / "bad.tsv"
    path.write_text("Bats\tbat\n\n", encoding="utf-8")
    assert main(["stats", str(path)]) == EXIT_DATA


@pytest.mark.parametrize("argv", [
    [],
    ["frobnicate"],
    ["train", "--train", "x.tsv"],
    ["snippetize", "x.tsv", "--window", "-1"],
    ["predict", "--model", "m.lmd", "--input", "x.tsv", "-o", "y.tsv", "--beam", "0"],
])
def test_usage_errors(argv):
    assert main(argv) == EXIT_USAGE


def test_version(capsys):
    assert main(["--version"]) == EXIT_OK
    assert capsys.readouterr().out.startswith("lemmed ")


def test_vote_needs_context_window(tmp_path):
    argv = ["predict", "--model", str(tmp_path / "missing.lmd"), "--input", "x.tsv", "-o", str(tmp_path / "y.tsv"),
            "--vote", "--mode", "full_sequence"]
    assert main(argv) == EXIT_USAGE


@pytest.mark.parametrize("flags", [["--dropout", "1.5"], ["--lr", "0"]])
def test_train_flags_checked_before_reading(tmp_path, flags):
    # the corpora do not exist; a bad flag must still be reported as a usage error
    argv = ["train", "--train", str(tmp_path / "missing.tsv"), "--dev", str(tmp_path / "missing.tsv"), "-o",
            str(tmp_path / "run")] + flags
    assert main(argv) == EXIT_USAGE
    assert not (tmp_path / "run").exists()


def test_snippetize(bats_path, tmp_path):
    output = tmp_path / "snippets.txt"
    assert main(["snippetize", bats_path, "--window", "0", "-o", str(output)]) == EXIT_OK
    lines = output.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "B a t s <WB>\tb a t +N +PL <WB>"
    assert len(lines) == 3


def test_snippetize_surface_only(bats_path, capsys):
    assert main(["snippetize", bats_path, "--mode", "full_sequence", "--surface-only"]) == EXIT_OK
    assert capsys.readouterr().out == "B a t s <WB> b i t <WB> c a t s <WB>\t\n"


def test_config_file_unknown_key(bats_path, tmp_path):
    config = tmp_path / "run.cfg"
    config.write_text("windw=2\n", encoding="utf-8")
    assert main(["snippetize", bats_path, "--config", str(config)]) == EXIT_USAGE


def test_config_file_values(bats_path, tmp_path, capsys):
    config = tmp_path / "run.cfg"
    config.write_text("# snippets\nwindow=0\ntc_mode=none\n", encoding="utf-8")
    assert main(["snippetize", bats_path, "--config", str(config)]) == EXIT_OK
    assert capsys.readouterr().out.splitlines()[1] == "b i t <WB>\tb i t e +PST +V <WB>"


@pytest.fixture
def corpora(tmp_path):
    paths = {}
    for name, n, seed in (("train", 12, 0), ("dev", 4, 1)):
        path = tmp_path / f"{name}.tsv"
        path.write_text(write_corpus(make_synthetic_corpus(n, seed=seed)), encoding="utf-8")
        paths[name] = str(path)
    return paths


def test_train_predict_evaluate(corpora, tmp_path, capsys):
    out = tmp_path / "run"
    argv = ["train", "--train", corpora["train"], "--dev", corpora["dev"], "-o", str(out), "--steps", "20",
            "--checkpoint-every", "10", "--batch-size", "8"] + TINY_MODEL
    assert main(argv) == EXIT_OK
    assert capsys.readouterr().out.startswith("selected step ")
    files = set(os.listdir(out))
    assert {"best.lmd", "report.tsv", "train.log", "checkpoint_000020.lmd"} <= files
    checkpoint = load_checkpoint(str(out / "best.lmd"))
    assert checkpoint.metadata["snippet_config"] == {"mode": "context_window", "window": 1, "tc_mode": "both"}
    assert checkpoint.model.config.hidden_units == 8

    pred = tmp_path / "pred.tsv"
    mismatches = tmp_path / "mismatches.tsv"
    argv = ["predict", "--model", str(out / "best.lmd"), "--input", corpora["dev"], "-o", str(pred), "--beam", "2",
            "--vote", "--mismatches", str(mismatches), "--workers", "2"]
    assert main(argv) == EXIT_OK
    predicted, gold = read_corpus(str(pred)), read_corpus(corpora["dev"])
    assert [s.surfaces for s in predicted] == [s.surfaces for s in gold]
    assert mismatches.exists()

    assert main(["evaluate", "--pred", str(pred), "--gold", corpora["dev"], "--train-reference", corpora["train"],
                 "--machine"]) == EXIT_OK
    out_lines = capsys.readouterr().out.splitlines()
    assert out_lines[0].split() == ["metric", "overall", "oov"]
    assert any(line.startswith("overall.analysis_accuracy=") for line in out_lines)
    assert out_lines[-1].startswith("shared_task_average=")

    # the model only knows its own snippet configuration
    argv = ["predict", "--model", str(out / "best.lmd"), "--input", corpora["dev"], "-o", str(pred), "--window",
            "2"]
    assert main(argv) == EXIT_USAGE


def test_evaluate_misaligned(bats_path, corpora):
    assert main(["evaluate", "--pred", bats_path, "--gold", corpora["dev"]]) == EXIT_DATA


def test_corrupt_model_is_a_data_error(bats_path, tmp_path):
    model = tmp_path / "broken.lmd"
    model.write_bytes(b"LEMMEDCK" + b"\0" * 4)
    argv = ["predict", "--model", str(model), "--input", bats_path, "-o", str(tmp_path / "y.tsv")]
    assert main(argv) == EXIT_DATA


def _train_and_predict(corpora, directory):
    out = directory / "run"
    pred = directory / "pred.tsv"
    argv = ["train", "--train", corpora["train"], "--dev", corpora["dev"], "-o", str(out), "--steps", "12",
            "--checkpoint-every", "6", "--batch-size", "8", "--seed", "3", "--dropout", "0.2"] + TINY_MODEL[:-2]
    assert main(argv) == EXIT_OK
    argv = ["predict", "--model", str(out / "best.lmd"), "--input", corpora["dev"], "-o", str(pred), "--beam", "3",
            "--vote"]
    assert main(argv) == EXIT_OK
    return [(out / "report.tsv").read_bytes(), (out / "best.lmd").read_bytes(), pred.read_bytes()]


def test_same_seed_gives_identical_outputs(corpora, tmp_path):
    (tmp_path / "a").mkdir()
    (tmp_path / "b").mkdir()
    assert _train_and_predict(corpora, tmp_path / "a") == _train_and_predict(corpora, tmp_path / "b")

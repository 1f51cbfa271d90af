"""Command-line interface: pipeline wiring, manifests, error objects."""

import json
import shutil
import sys
from pathlib import Path

import pytest

from prosub.cli import main
from prosub.scorer import load_model
from prosub.treebank import read_eval_pairs, write_eval_pairs, EvalPair, Sentence, Span

DATA = Path(__file__).parent / "data"


@pytest.fixture()
def treebank(tmp_path):
    tb = tmp_path / "tb"
    tb.mkdir()
    shutil.copy(DATA / "sample.mrg", tb / "sample.mrg")
    return tb


def _run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


# ---------------------------------------------------------------------------
# make-pairs / extract-corpus
# ---------------------------------------------------------------------------


def test_make_pairs_matches_golden_file(treebank, tmp_path, capsys):
    out = tmp_path / "pairs.jsonl"
    code, stdout, _ = _run(capsys, "make-pairs", "--treebank", str(treebank),
                           "--out", str(out), "--seed", "0")
    assert code == 0
    assert "20 pairs" in stdout
    assert out.read_bytes() == (DATA / "golden_pairs.jsonl").read_bytes()
    manifest = json.loads((tmp_path / "pairs.jsonl.manifest.json").read_text())
    assert manifest["command"] == "make-pairs"
    assert manifest["seed"] == 0
    assert manifest["n_pairs"] == 20
    assert manifest["version"]


def test_make_pairs_deterministic(treebank, tmp_path, capsys):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    assert _run(capsys, "make-pairs", "--treebank", str(treebank), "--out", str(a))[0] == 0
    assert _run(capsys, "make-pairs", "--treebank", str(treebank), "--out", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_make_pairs_empty_directory_errors(tmp_path, capsys):
    empty = tmp_path / "empty"
    empty.mkdir()
    code, _, stderr = _run(capsys, "make-pairs", "--treebank", str(empty),
                           "--out", str(tmp_path / "x.jsonl"))
    assert code == 1
    err = json.loads(stderr)
    assert set(err) == {"error", "message"}
    assert "no treebank files" in err["message"]


def test_make_pairs_parse_error_names_file(tmp_path, capsys):
    tb = tmp_path / "tb"
    tb.mkdir()
    (tb / "broken.mrg").write_text("(S (NP (DT the)")
    code, _, stderr = _run(capsys, "make-pairs", "--treebank", str(tb),
                           "--out", str(tmp_path / "x.jsonl"))
    assert code == 1
    err = json.loads(stderr)
    assert "broken.mrg" in err["message"]
    assert "offset" in err["message"]


def test_extract_corpus(treebank, tmp_path, capsys):
    out = tmp_path / "corpus.txt"
    code, _, _ = _run(capsys, "extract-corpus", "--treebank", str(treebank),
                      "--out", str(out))
    assert code == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 20
    assert lines[0] == "the cat saw a red bird ."
    assert all(line == " ".join(line.split()) for line in lines)


# ---------------------------------------------------------------------------
# build-data / train
# ---------------------------------------------------------------------------


@pytest.fixture()
def corpus_file(treebank, tmp_path, capsys):
    out = tmp_path / "corpus.txt"
    assert main(["extract-corpus", "--treebank", str(treebank), "--out", str(out)]) == 0
    capsys.readouterr()
    return out


def test_build_data_deterministic(corpus_file, tmp_path, capsys):
    a, b = tmp_path / "da.jsonl", tmp_path / "db.jsonl"
    for out in (a, b):
        code, _, _ = _run(capsys, "build-data", "--corpus", str(corpus_file),
                          "--scheme", "nonfocused", "--seed", "4", "--out", str(out))
        assert code == 0
    assert a.read_bytes() == b.read_bytes()


def test_build_data_empty_focused_warns(tmp_path, capsys):
    corpus = tmp_path / "c.txt"
    corpus.write_text("alpha beta gamma delta\nepsilon zeta eta theta\n")
    out = tmp_path / "d.jsonl"
    code, _, stderr = _run(capsys, "build-data", "--corpus", str(corpus),
                           "--scheme", "focused", "--out", str(out))
    assert code == 0
    assert "warning" in stderr
    assert out.read_text().count("\n") == 1  # header only


def test_train_and_manifest_history(corpus_file, tmp_path, capsys):
    data = tmp_path / "d.jsonl"
    pairs = tmp_path / "p.jsonl"
    model_path = tmp_path / "m.bin"
    assert main(["build-data", "--corpus", str(corpus_file), "--scheme", "focused",
                 "--tests", "it,did_so,of_it", "--seed", "1", "--out", str(data)]) == 0
    tb_parent = corpus_file.parent / "tb"
    assert main(["make-pairs", "--treebank", str(tb_parent), "--out", str(pairs),
                 "--seed", "1"]) == 0
    capsys.readouterr()
    code, stdout, _ = _run(capsys, "train", "--data", str(data),
                           "--dev-pairs", str(pairs), "--seed", "1",
                           "--hash-dim", "65536", "--out", str(model_path))
    assert code == 0
    assert "best epoch" in stdout
    model = load_model(model_path)
    assert model.markup is True
    manifest = json.loads((tmp_path / "m.bin.manifest.json").read_text())
    assert len(manifest["history"]["train_loss"]) == 10
    assert len(manifest["history"]["dev_metric"]) == 10
    assert 1 <= manifest["history"]["best_epoch"] <= 10


def test_train_scheme_mismatch_refused(corpus_file, tmp_path, capsys):
    data = tmp_path / "d.jsonl"
    assert main(["build-data", "--corpus", str(corpus_file), "--scheme", "focused",
                 "--tests", "it", "--out", str(data)]) == 0
    capsys.readouterr()
    code, _, stderr = _run(capsys, "train", "--data", str(data), "--no-markup",
                           "--out", str(tmp_path / "m.bin"))
    assert code == 1
    err = json.loads(stderr)
    assert err["error"] == "ConfigurationError"
    assert "mismatch" in err["message"]


# ---------------------------------------------------------------------------
# evaluate / select-proforms / serve
# ---------------------------------------------------------------------------


@pytest.fixture()
def trained(corpus_file, tmp_path, capsys):
    data = tmp_path / "d.jsonl"
    pairs = tmp_path / "p.jsonl"
    model_path = tmp_path / "m.bin"
    assert main(["build-data", "--corpus", str(corpus_file), "--scheme", "focused",
                 "--tests", "it,did_so,of_it", "--seed", "0", "--out", str(data)]) == 0
    assert main(["make-pairs", "--treebank", str(corpus_file.parent / "tb"),
                 "--out", str(pairs), "--seed", "0"]) == 0
    assert main(["train", "--data", str(data), "--dev-pairs", str(pairs),
                 "--seed", "0", "--hash-dim", "65536", "--out", str(model_path)]) == 0
    capsys.readouterr()
    return model_path, pairs


def test_evaluate_writes_report(trained, tmp_path, capsys):
    model_path, pairs = trained
    report_path = tmp_path / "report.json"
    code, stdout, _ = _run(capsys, "evaluate", "--model", str(model_path),
                           "--pairs", str(pairs), "--strategy", "maximum",
                           "--tests", "it,did_so,of_it", "--out", str(report_path))
    assert code == 0
    assert "accuracy" in stdout
    report = json.loads(report_path.read_text())
    assert report["strategy"] == "maximum"
    assert report["tests"] == ["it", "did_so", "of_it"]
    assert 0.0 <= report["accuracy"] <= 1.0
    assert len(report["pairs"]) == report["n"]


def test_evaluate_external_matches_builtin(trained, tmp_path, capsys):
    model_path, pairs = trained
    local = tmp_path / "local.json"
    remote = tmp_path / "remote.json"
    base = ["--pairs", str(pairs), "--strategy", "maximum",
            "--tests", "it,did_so,of_it"]
    assert main(["evaluate", "--model", str(model_path), *base,
                 "--out", str(local)]) == 0
    serve_cmd = f"{sys.executable} -m prosub.cli serve --model {model_path}"
    assert main(["evaluate", "--external", serve_cmd, "--markup", *base,
                 "--out", str(remote)]) == 0
    capsys.readouterr()
    assert json.loads(local.read_text()) == json.loads(remote.read_text())


def test_evaluate_voting_tiebreak_fixture(tmp_path, capsys):
    sentence = Sentence("fx", ("a", "b", "c", "d"))
    pairs_path = tmp_path / "p.jsonl"
    write_eval_pairs([EvalPair(sentence, Span(0, 2), Span(2, 4))], pairs_path)
    # Opposing single votes; the maximum comparison must break the tie in
    # favour of the constituent.
    fixture = tmp_path / "fixture_scorer.py"
    fixture.write_text(
        "import json, sys\n"
        "TABLE = {\n"
        "    'it c d': 0.9, 'did so c d': 0.1,\n"
        "    'a b it': 0.2, 'a b did so': 0.3,\n"
        "}\n"
        "print(json.dumps({'protocol': 'grammaticality-scorer/1'}), flush=True)\n"
        "for line in sys.stdin:\n"
        "    obj = json.loads(line)\n"
        "    if obj.get('cmd') == 'shutdown':\n"
        "        break\n"
        "    score = TABLE[' '.join(obj['tokens'])]\n"
        "    print(json.dumps({'id': obj['id'], 'score': score}), flush=True)\n"
    )
    out = tmp_path / "r.json"
    code, _, _ = _run(capsys, "evaluate",
                      "--external", f"{sys.executable} {fixture}",
                      "--pairs", str(pairs_path), "--strategy", "voting",
                      "--tests", "it,did_so", "--out", str(out))
    assert code == 0
    report = json.loads(out.read_text())
    assert report["accuracy"] == 1.0
    assert report["pairs"][0]["decision"] == "constituent"


def test_evaluate_protocol_error_surfaces(trained, tmp_path, capsys):
    _, pairs = trained
    stub = Path(__file__).parent / "stubs" / "stub_scorer.py"
    code, _, stderr = _run(capsys, "evaluate",
                           "--external", f"{sys.executable} {stub} garbage",
                           "--pairs", str(pairs), "--out", str(tmp_path / "r.json"))
    assert code == 1
    assert json.loads(stderr)["error"] == "ProtocolError"


def test_select_proforms_trace(trained, tmp_path, capsys):
    model_path, pairs = trained
    out = tmp_path / "trace.json"
    code, stdout, _ = _run(capsys, "select-proforms", "--model", str(model_path),
                           "--dev-pairs", str(pairs), "--max-k", "2",
                           "--tests", "it,did_so,of_it", "--out", str(out))
    assert code == 0
    trace = json.loads(out.read_text())
    assert trace["strategy"] == "maximum"
    assert len(trace["selected"]) <= 2
    assert trace["trace"] == sorted(trace["trace"])
    assert all(t in ("it", "did_so", "of_it") for t in trace["selected"])
    assert stdout.count("+") == len(trace["selected"])


def test_unknown_test_id_errors(trained, tmp_path, capsys):
    model_path, pairs = trained
    code, _, stderr = _run(capsys, "evaluate", "--model", str(model_path),
                           "--pairs", str(pairs), "--tests", "bogus",
                           "--out", str(tmp_path / "r.json"))
    assert code == 1
    assert "bogus" in json.loads(stderr)["message"]


def test_missing_model_file_errors(trained, tmp_path, capsys):
    _, pairs = trained
    code, _, stderr = _run(capsys, "evaluate", "--model", str(tmp_path / "no.bin"),
                           "--pairs", str(pairs), "--out", str(tmp_path / "r.json"))
    assert code == 1
    assert json.loads(stderr)["error"] in ("FileNotFoundError", "OSError")

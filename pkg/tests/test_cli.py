import json

from click.testing import CliRunner

from codevoice.cli import main
from codevoice.evaluation import bundled_fixture_path


def test_eval_gen_writes_corpus(tmp_path):
    out = tmp_path / "corpus.jsonl"
    result = CliRunner().invoke(main, ["eval", "gen", "--seed", "3", "--n", "4",
                                       "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert out.exists()
    assert len(out.read_text(encoding="utf-8").splitlines()) == 4


def test_eval_gen_rejects_zero_cases(tmp_path):
    result = CliRunner().invoke(main, ["eval", "gen", "--seed", "3", "--n", "0",
                                       "--out", str(tmp_path / "c.jsonl")])
    assert result.exit_code == 2


def test_eval_run_writes_tables_and_figures(tmp_path):
    out = tmp_path / "report"
    result = CliRunner().invoke(main, ["eval", "run",
                                       "--corpus", str(bundled_fixture_path()),
                                       "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert "exact_match_rate   0.7500" in result.output
    for name in ("report.json", "report.txt", "per_case.csv",
                 "wer_per_case.png", "exact_match.png"):
        assert (out / name).exists(), name
    assert (out / "wer_per_case.png").read_bytes()[:4] == b"\x89PNG"
    doc = json.loads((out / "report.json").read_text(encoding="utf-8"))
    assert doc["n_cases"] == 96


def test_eval_run_full_mode(tmp_path):
    corpus = tmp_path / "c.jsonl"
    CliRunner().invoke(main, ["eval", "gen", "--seed", "9", "--n", "3",
                              "--out", str(corpus)])
    result = CliRunner().invoke(main, ["eval", "run", "--corpus", str(corpus),
                                       "--mode", "full",
                                       "--out", str(tmp_path / "rep")])
    assert result.exit_code == 0, result.output
    doc = json.loads((tmp_path / "rep" / "report.json").read_text(encoding="utf-8"))
    assert all(c["pipeline_ok"] for c in doc["cases"])


def test_eval_run_broken_corpus_exits_2(tmp_path):
    corpus = tmp_path / "bad.jsonl"
    corpus.write_text("this is not json\n", encoding="utf-8")
    result = CliRunner().invoke(main, ["eval", "run", "--corpus", str(corpus),
                                       "--out", str(tmp_path / "rep")])
    assert result.exit_code == 2
    assert "corpus error" in result.output


def test_serve_rejects_malformed_listen():
    result = CliRunner().invoke(main, ["serve", "--mock-all", "--listen", "nonsense"])
    assert result.exit_code == 2
    assert "ADDR:PORT" in result.output


def test_serve_rejects_zero_workers():
    result = CliRunner().invoke(main, ["serve", "--mock-all", "--workers", "0"])
    assert result.exit_code == 2

import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from wordniche.cli import main
from wordniche.tables import read_csv


@pytest.fixture(scope="module")
def runner():
    return CliRunner()


@pytest.fixture(scope="module")
def corpus_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "corpus.jsonl"
    runner = CliRunner()
    result = runner.invoke(main, [
        "synth", "--out", str(path),
        "--n-windows", "9", "--n-users", "60", "--n-threads", "50",
        "--posts-per-window", "350", "--vocab-size", "300", "--seed", "5",
    ])
    assert result.exit_code == 0, result.output
    return path


def test_synth_then_measures(runner, corpus_file, tmp_path):
    outdir = tmp_path / "out"
    result = runner.invoke(main, [
        "measures", "--input", str(corpus_file), "--outdir", str(outdir), "--count-tables",
    ])
    assert result.exit_code == 0, result.output
    header, rows = read_csv(outdir / "measures.csv")
    assert header[:4] == ["window_index", "word", "n_w", "f"]
    assert len(rows) > 100
    with open(outdir / "measures.csv") as handle:
        assert handle.readline().startswith("# format=")
    wc_header, wc_rows = read_csv(outdir / "word_counts_w0000.csv")
    assert wc_header == ["word", "n_w", "u_w", "t_w"]
    uc_header, uc_rows = read_csv(outdir / "user_counts_w0000.csv")
    assert uc_header == ["user", "m_i"]
    assert sum(int(r[1]) for r in wc_rows) == sum(int(r[1]) for r in uc_rows)


def test_measures_on_empty_input(runner, tmp_path):
    empty = tmp_path / "empty.jsonl"
    empty.write_text("")
    result = runner.invoke(main, ["measures", "--input", str(empty), "--outdir", str(tmp_path / "x")])
    assert result.exit_code != 0
    assert "no posts" in result.output


def test_unknown_flag_is_usage_error(runner):
    result = runner.invoke(main, ["measures", "--frobnicate"])
    assert result.exit_code != 0


def test_ingest_reports_counts(runner, corpus_file, tmp_path):
    report = tmp_path / "report.json"
    result = runner.invoke(main, ["ingest", "--input", str(corpus_file), "--report", str(report)])
    assert result.exit_code == 0
    data = json.loads(report.read_text())
    assert data["accepted"] == 9 * 350
    assert data["rejected"] == 0


def test_config_file_overrides_flags(runner, corpus_file, tmp_path):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"baseline": "exact"}))
    outdir = tmp_path / "cfg"
    result = runner.invoke(main, [
        "measures", "--input", str(corpus_file), "--outdir", str(outdir),
        "--baseline", "poisson", "--config", str(config),
    ])
    assert result.exit_code == 0
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"not_a_key": 1}))
    result = runner.invoke(main, [
        "measures", "--input", str(corpus_file), "--outdir", str(outdir),
        "--config", str(bad),
    ])
    assert result.exit_code != 0
    assert "unknown config key" in result.output


def test_strip_quoted_flag_and_tokenizer_config(runner, tmp_path):
    corpus = tmp_path / "quoted.jsonl"
    corpus.write_text(json.dumps({
        "post_id": "a", "user_id": "u1", "thread_id": "t1",
        "timestamp": "1998-01-02T00:00:00Z", "body": "ok\n> quoted reply\nthanks",
    }) + "\n")

    def tokens_of(outdir, *extra):
        result = runner.invoke(main, [
            "measures", "--input", str(corpus), "--outdir", str(outdir), *extra,
        ])
        assert result.exit_code == 0, result.output
        _, rows = read_csv(outdir / "windows.csv")
        return int(rows[0][5])  # n_tokens column

    assert tokens_of(tmp_path / "strip") == 2
    assert tokens_of(tmp_path / "keep", "--no-strip-quoted") == 4
    tc = tmp_path / "tok.json"
    tc.write_text(json.dumps({"strip_quoted": False}))
    assert tokens_of(tmp_path / "cfg", "--tokenizer-config", str(tc)) == 4


def test_bands_and_dhat_smoke(runner, corpus_file, tmp_path):
    outdir = tmp_path / "bands"
    result = runner.invoke(main, [
        "bands", "--input", str(corpus_file), "--outdir", str(outdir), "--replicates", "20",
    ])
    assert result.exit_code == 0, result.output
    header, rows = read_csv(outdir / "bands.csv")
    assert "p10" in header and len(rows) > 0

    result = runner.invoke(main, ["dhat", "--input", str(corpus_file), "--outdir", str(outdir)])
    assert result.exit_code == 0, result.output
    header, rows = read_csv(outdir / "dhat.csv")
    assert "dhat_user" in header and len(rows) > 0


def test_dynamics_and_importance_smoke(runner, corpus_file, tmp_path):
    outdir = tmp_path / "dyn"
    result = runner.invoke(main, ["dynamics", "--input", str(corpus_file), "--outdir", str(outdir)])
    assert result.exit_code == 0, result.output
    for name in ("fate", "survival", "medians", "franges", "correlations"):
        header, _ = read_csv(outdir / f"{name}.csv")
        assert header

    result = runner.invoke(main, ["importance", "--input", str(corpus_file), "--outdir", str(outdir)])
    assert result.exit_code == 0, result.output
    header, rows = read_csv(outdir / "importance.csv")
    assert {r[3] for r in rows} == {"d_user", "d_thread", "log10_f"}
    for row in rows:  # every numeric cell parses as a plain float
        float(row[4])
        float(row[5])


def test_trim_and_casestudy_smoke(runner, corpus_file, tmp_path):
    outdir = tmp_path / "trim"
    result = runner.invoke(main, ["trim", "--input", str(corpus_file), "--outdir", str(outdir)])
    assert result.exit_code == 0, result.output
    header, rows = read_csv(outdir / "trim_report.csv")
    assert len(rows) == 9

    outdir = tmp_path / "case"
    result = runner.invoke(main, ["casestudy", "--input", str(corpus_file), "--outdir", str(outdir)])
    assert result.exit_code == 0, result.output
    read_csv(outdir / "trajectories.csv")


def _tree_bytes(root: Path) -> dict[str, bytes]:
    return {
        str(p.relative_to(root)): p.read_bytes()
        for p in sorted(root.rglob("*"))
        if p.is_file()
    }


def test_report_twice_is_byte_identical(runner, corpus_file, tmp_path):
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    for outdir in (out1, out2):
        result = runner.invoke(main, [
            "report", "--input", str(corpus_file), "--outdir", str(outdir),
            "--replicates", "10", "--seed", "13",
        ])
        assert result.exit_code == 0, result.output
    t1, t2 = _tree_bytes(out1), _tree_bytes(out2)
    assert t1.keys() == t2.keys()
    for name in t1:
        assert t1[name] == t2[name], f"{name} differs between runs"


def test_report_manifest_contents(runner, corpus_file, tmp_path):
    outdir = tmp_path / "rep"
    result = runner.invoke(main, [
        "report", "--input", str(corpus_file), "--outdir", str(outdir),
        "--replicates", "10",
    ])
    assert result.exit_code == 0, result.output
    manifest = json.loads((outdir / "manifest.json").read_text())
    assert manifest["format"] == "wordniche-run-1"
    assert len(manifest["config_hash"]) == 64
    assert all(s["status"] == "ok" for s in manifest["stages"])
    assert "measures.csv" in manifest["outputs"]
    for name in manifest["outputs"]:
        with open(outdir / name) as handle:
            assert handle.readline().startswith("# format=wordniche-csv-")
            assert "," in handle.readline()  # header row follows the comment


def test_report_partial_failure_sets_stage_status(runner, tmp_path):
    # one window: the pair-based stages cannot run, the rest still can
    single = tmp_path / "single.jsonl"
    result = runner.invoke(main, [
        "synth", "--out", str(single), "--n-windows", "1", "--n-users", "40",
        "--n-threads", "30", "--posts-per-window", "250", "--vocab-size", "200",
    ])
    assert result.exit_code == 0, result.output
    outdir = tmp_path / "partial"
    result = runner.invoke(main, [
        "report", "--input", str(single), "--outdir", str(outdir), "--replicates", "5",
    ])
    assert result.exit_code != 0
    manifest = json.loads((outdir / "manifest.json").read_text())
    status = {s["name"]: s["status"] for s in manifest["stages"]}
    assert status["measures"] == "ok"
    assert status["bands"] == "ok"
    assert status["dynamics"] == "failed"
    failed = [s for s in manifest["stages"] if s["status"] == "failed"]
    assert all("error" in s for s in failed)

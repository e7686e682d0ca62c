from __future__ import annotations

import json
from pathlib import Path

from click.testing import CliRunner

from skg.canonical import loads_document, read_lines
from skg.cli import main


def _run(*args):
    runner = CliRunner()
    result = runner.invoke(main, [str(a) for a in args], catch_exceptions=False)
    assert result.exit_code == 0, result.output
    return result


def test_full_offline_workflow(tmp_path, fixtures_dir):
    cases = tmp_path / "cases"
    synth = tmp_path / "synth"
    bench = tmp_path / "bench"

    _run("demo-data", "--out", cases, "--count", 6, "--seed", 3)
    assert len(list(cases.glob("*.case"))) == 6

    out = _run(
        "synth", "--cases", cases, "--out", synth, "--mock-llm", "--workers", 2, "--seed", 3
    )
    assert "finals=6" in out.output
    assert (synth / "emissions.skgl").exists()
    assert (synth / "traces.tracel").exists()

    _run("build-bench", "--emissions", synth / "emissions.skgl", "--out", bench)
    text_records = [
        loads_document(line)
        for line in (bench / "bench_text.jsonl").read_text().splitlines()
        if line
    ]
    assert text_records
    assert all(r["benchmark"] == "ComplaintScene-Text" for r in text_records)

    for stage in ("pt", "sft", "mm"):
        _run(
            "emit-corpus",
            "--emissions", synth / "emissions.skgl",
            "--stage", stage,
            "--out", tmp_path / f"{stage}.jsonl",
        )
        assert (tmp_path / f"{stage}.jsonl").stat().st_size > 0

    # replay eval over the generated bench with all-gold answers
    letters = "ABCDE"
    replay = tmp_path / "replay.jsonl"
    with replay.open("w") as fp:
        for path in (bench / "bench_text.jsonl", bench / "bench_mm.jsonl"):
            with path.open() as grid:
                for doc in read_lines(grid):
                    fp.write(
                        json.dumps(
                            {"record_id": doc["record_id"], "answer": letters[doc["qa"]["gold_index"]]}
                        )
                        + "\n"
                    )
    report_path = tmp_path / "report.json"
    out = _run(
        "eval",
        "--bench", bench / "bench_text.jsonl",
        "--bench", bench / "bench_mm.jsonl",
        "--replay", replay,
        "--split", "train",  # the 6 demo cases land mostly in train
        "--report", report_path,
        "--csv", tmp_path / "report.csv",
        "--emissions", synth / "emissions.skgl",
    )
    report = json.loads(report_path.read_text())
    assert report["slices"]["full"]["aggregates"]["avg_text"] == 100.0
    assert report["slices"]["full"]["aggregates"]["avg_mm"] == 100.0
    assert (tmp_path / "report.csv").read_text().startswith("slice,metric,score")


def test_corrupt_command(tmp_path):
    cases = tmp_path / "cases"
    _run("demo-data", "--out", cases, "--count", 4, "--seed", 8)
    out_dir = tmp_path / "corrupted"
    _run("corrupt", "--cases", cases, "--out", out_dir, "--level", 0.3, "--seed", 5)
    assert len(list(out_dir.glob("*.case"))) == 4


def test_ingest_cfpb_command(tmp_path, fixtures_dir):
    out_dir = tmp_path / "cfpb"
    result = _run("ingest-cfpb", fixtures_dir / "cfpb_sample.csv", "--out", out_dir)
    assert "ingested 2 cases (skipped 1)" in result.output
    assert len(list((out_dir / "cases").glob("*.case"))) == 2
    product_lines = (out_dir / "cfpb_product.jsonl").read_text().splitlines()
    assert len(product_lines) == 2
    doc = loads_document(product_lines[0])
    assert doc["benchmark"] == "CFPB-Product"
    assert doc["label"] == "Credit card"


def test_check_command(tmp_path, fixtures_dir):
    result = _run("check", fixtures_dir / "canonical_refund.skg")
    assert "ok" in result.output


def test_synth_ablation_flags(tmp_path):
    cases = tmp_path / "cases"
    _run("demo-data", "--out", cases, "--count", 3, "--seed", 4)
    out_dir = tmp_path / "ablated"
    result = _run(
        "synth",
        "--cases", cases,
        "--out", out_dir,
        "--mock-llm",
        "--ablate", "skip_graph,skip_verification",
        "--workers", 1,
    )
    assert "finals=3" in result.output
    docs = [
        loads_document(line)
        for line in (out_dir / "emissions.skgl").read_text().splitlines()
        if line
    ]
    assert all("graph" not in d for d in docs)

import json

import pytest

from rformer.bench import FIELDS, BenchRecord, bench_epoch, default_bench_config, emit_report, render_markdown, speedup


def rec(kind, n, sec):
    return BenchRecord(kind, n, 75, 75 if kind == "rformer" else n, 6, 100, 32, 32, 5, sec, 0.01, 0.0, 1.0, 32 * n / sec)


def test_empty_report_is_an_error():
    with pytest.raises(ValueError):
        emit_report([], "csv")


def test_one_record_one_row(tmp_path):
    text = emit_report([rec("raw", 1000, 2.0)], "csv", tmp_path / "r.csv")
    lines = text.splitlines()
    assert lines[0].split(",") == list(FIELDS)
    assert len(lines) == 2
    assert (tmp_path / "r.csv").read_text() == text
    assert len(json.loads(emit_report([rec("raw", 1000, 2.0)], "json"))) == 1


def test_report_is_reproducible():
    records = [rec("rformer", 1000, 0.1), rec("raw", 1000, 2.0)]
    assert emit_report(records, "csv") == emit_report(records, "csv")
    with pytest.raises(ValueError):
        emit_report(records, "xml")


def test_markdown_layout():
    records = [rec("rformer", 1000, 0.1), rec("raw", 1000, 2.0), rec("rformer", 2000, 0.1), rec("raw", 2000, 8.0)]
    assert render_markdown(records).splitlines() == [
        "| Model | L=1000 | L=2000 |",
        "|---|---|---|",
        "| rformer | 0.100 | 0.100 |",
        "| raw | 2.000 | 8.000 |",
        "| Speedup | 20.00x | 80.00x |",
    ]
    assert speedup(records[1], records[0]) == pytest.approx(20.0)


def test_bench_epoch_record():
    cfg = default_bench_config(num_windows=4, batch_size=4)
    r = bench_epoch("rformer", 80, cfg, samples=8, epochs=2)
    assert r.status == "ok" and r.sec_per_epoch > 0 and r.tokens == 4
    assert r.sig_sec_per_epoch > 0 and r.peak_mem_mb > 0
    raw = bench_epoch("raw", 80, cfg, samples=8, epochs=2, measure_memory=False)
    assert raw.tokens == 80 and raw.peak_mem_mb is None


def test_bench_needs_measured_epochs():
    with pytest.raises(ValueError):
        bench_epoch("raw", 50, default_bench_config(), samples=4, epochs=0)

import json
import math

import pytest

from vhbound.experiment import (TIMING_FIELDS, ExperimentConfig, ReportRow, read_csv, read_jsonl,
                                render_table, row_from_dict, row_to_json, rows_to_csv,
                                run_experiment, sandwich_holds)

CONFIG = dict(cells=[(1.0, 3), (0.5, 2)], seeds=(1, 0), samples=5000)


def _strip(row):
    d = json.loads(row_to_json(row, timing=False))
    return d


@pytest.fixture(scope="module")
def rows(tmp_path_factory):
    d = tmp_path_factory.mktemp("exp")
    cfg = ExperimentConfig(**CONFIG, jsonl_path=str(d / "r.jsonl"), csv_path=str(d / "r.csv"))
    return run_experiment(cfg), d


def test_sorted_and_complete(rows):
    rs, _ = rows
    assert [(r.kappa, r.n, r.seed) for r in rs] == sorted((k, n, s) for k, n in CONFIG["cells"]
                                                          for s in CONFIG["seeds"])
    assert all(r.status == "ok" and r.sandwich for r in rs)


def test_deterministic(rows):
    rs, _ = rows
    again = run_experiment(ExperimentConfig(**CONFIG))
    assert [_strip(r) for r in rs] == [_strip(r) for r in again]


def test_round_trip(rows):
    rs, d = rows
    back = read_jsonl(d / "r.jsonl")
    assert [_strip(r) for r in back] == [_strip(r) for r in rs]
    from_csv = read_csv((d / "r.csv").read_text())
    assert [_strip(r) for r in from_csv] == [_strip(r) for r in rs]


def test_csv_without_timing(rows):
    header = rows_to_csv(rows[0], timing=False).splitlines()[0].split(",")
    assert not set(header) & set(TIMING_FIELDS)
    assert header[:3] == ["kappa", "n", "seed"]


def test_table(rows):
    text = render_table(rows[0])
    assert "log partition function" in text and "error in first moment" in text


def test_empty_and_invalid():
    assert run_experiment(ExperimentConfig()) == []
    with pytest.raises(ValueError):
        ExperimentConfig(cells=[(1.0, 2)], samples=10)
    with pytest.raises(ValueError):
        ExperimentConfig(cells=[(1.0, 2)], oracle="magic")


def test_nan_serialises_as_null():
    row = ReportRow(1.0, 2, 0)
    obj = json.loads(row_to_json(row))
    assert obj["log_vh"] is None
    assert math.isnan(row_from_dict(obj).log_vh)


def test_sandwich_rule():
    row = ReportRow(1.0, 2, 0, log_vb=0.0, log_oracle=1.0, oracle_se=0.1, log_vh=1.05)
    assert sandwich_holds(row)
    row.log_vb = 1.5
    assert not sandwich_holds(row)

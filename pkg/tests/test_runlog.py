"""CSV log layer: schemas, undefined-field encoding, parse round trips."""

import pytest

from refreshrl.analysis import MetricsRow
from refreshrl.runlog import METRICS_COLUMNS, CsvLog, RunDir, read_csv


def test_csv_log_fixed_column_count(tmp_path):
    log = CsvLog(tmp_path / "x.csv", ["a", "b"])
    log.write(1, 2.5)
    with pytest.raises(ValueError):
        log.write(1)
    log.close()
    rows = read_csv(tmp_path / "x.csv")
    assert rows == [{"a": 1.0, "b": 2.5}]


def test_undefined_metrics_serialize_empty_not_zero(tmp_path):
    rd = RunDir(tmp_path / "run")
    rd.write_metrics_row(MetricsRow(
        global_step=100, success_rate=None, mean_gnew=None, mean_g=None,
        old_used_ratio=0.0, batch_ratio_d=0.5, batch_ratio_r=0.0,
        sil_ratio_d=None, sil_ratio_r=None, used_return_d=None,
        used_return_r=None))
    rd.close()
    raw = (tmp_path / "run" / "metrics.csv").read_text().splitlines()
    assert raw[0] == ",".join(METRICS_COLUMNS)
    assert raw[1] == "100,,,,0.0,0.5,0.0,,,,"
    parsed = read_csv(tmp_path / "run" / "metrics.csv")[0]
    assert parsed["success_rate"] is None
    assert parsed["old_used_ratio"] == 0.0


def test_float_formatting_round_trips_exactly(tmp_path):
    log = CsvLog(tmp_path / "x.csv", ["v"])
    value = 0.4205735979665884
    log.write(value)
    log.close()
    assert read_csv(tmp_path / "x.csv")[0]["v"] == value

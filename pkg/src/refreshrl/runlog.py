"""Run-directory layout and CSV log schemas.

One directory per run: config.txt (resolved config echo), train.csv,
eval.csv, metrics.csv, checkpoints/, final_summary.txt.  Every CSV has a
header row and a fixed column count; undefined metric values serialize as
empty fields, never as zeros.
"""

from __future__ import annotations

import csv
import threading
from pathlib import Path

from .analysis import MetricsRow

TRAIN_COLUMNS = ["global_step", "wall_ms", "worker_kind", "event", "value"]
EVAL_COLUMNS = ["global_step", "seed", "mode", "episode_index", "episodic_reward"]
METRICS_COLUMNS = [
    "global_step", "success_rate", "mean_gnew", "mean_g", "old_used_ratio",
    "batch_ratio_D", "batch_ratio_R", "sil_ratio_D", "sil_ratio_R",
    "used_return_D", "used_return_R",
]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


class CsvLog:
    """Append-only CSV with a fixed header; writes are serialized."""

    def __init__(self, path: str | Path, columns: list[str]):
        self.path = Path(path)
        self.columns = columns
        self._lock = threading.Lock()
        self._fh = open(self.path, "w", newline="")
        self._writer = csv.writer(self._fh)
        self._writer.writerow(columns)
        self._fh.flush()

    def write(self, *values) -> None:
        if len(values) != len(self.columns):
            raise ValueError(f"expected {len(self.columns)} values, got {len(values)}")
        with self._lock:
            self._writer.writerow([_fmt(v) for v in values])
            self._fh.flush()

    def close(self) -> None:
        with self._lock:
            self._fh.close()


class RunDir:
    """Owns the per-run artifact files."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.mkdir(parents=True, exist_ok=True)
        (self.path / "checkpoints").mkdir(exist_ok=True)
        self.train = CsvLog(self.path / "train.csv", TRAIN_COLUMNS)
        self.eval = CsvLog(self.path / "eval.csv", EVAL_COLUMNS)
        self.metrics = CsvLog(self.path / "metrics.csv", METRICS_COLUMNS)

    def write_config(self, text: str) -> None:
        (self.path / "config.txt").write_text(text)

    def checkpoint_path(self, tag: str) -> Path:
        return self.path / "checkpoints" / f"{tag}.ckpt"

    def write_metrics_row(self, row: MetricsRow) -> None:
        self.metrics.write(row.global_step, row.success_rate, row.mean_gnew,
                           row.mean_g, row.old_used_ratio, row.batch_ratio_d,
                           row.batch_ratio_r, row.sil_ratio_d, row.sil_ratio_r,
                           row.used_return_d, row.used_return_r)

    def write_summary(self, lines: dict) -> None:
        text = "\n".join(f"{k} = {_fmt(v)}" for k, v in lines.items()) + "\n"
        (self.path / "final_summary.txt").write_text(text)

    def close(self) -> None:
        self.train.close()
        self.eval.close()
        self.metrics.close()


def read_csv(path: str | Path) -> list[dict]:
    """Parse one of our CSVs; numeric fields become floats, empty fields None."""
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            out = {}
            for key, raw in rec.items():
                if raw is None or raw == "":
                    out[key] = None
                else:
                    try:
                        out[key] = float(raw)
                    except ValueError:
                        out[key] = raw
            rows.append(out)
    return rows

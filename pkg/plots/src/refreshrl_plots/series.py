"""CSV parsing and series math shared by the plotting scripts."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

EVAL_FILE = "eval.csv"
METRICS_FILE = "metrics.csv"


def read_rows(path: Path) -> list[dict]:
    """Parse a run CSV: floats where possible, None for empty fields."""
    if not path.is_file():
        raise FileNotFoundError(str(path))
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


def smooth(values: np.ndarray, window: int) -> np.ndarray:
    """Centered moving average with shrinking edge windows."""
    if window <= 1 or values.size == 0:
        return values
    k = window // 2
    out = np.empty_like(values, dtype=np.float64)
    for i in range(values.size):
        lo, hi = max(0, i - k), min(values.size, i + k + 1)
        out[i] = values[lo:hi].mean()
    return out


def eval_curve(run_dir: Path) -> tuple[np.ndarray, np.ndarray]:
    """(steps, mean episodic reward per step) for one run directory."""
    rows = read_rows(run_dir / EVAL_FILE)
    if not rows:
        raise ValueError(f"{run_dir / EVAL_FILE}: no data rows")
    by_step: dict[float, list[float]] = {}
    for r in rows:
        by_step.setdefault(r["global_step"], []).append(r["episodic_reward"])
    steps = np.array(sorted(by_step))
    means = np.array([np.mean(by_step[s]) for s in steps])
    return steps, means


def metric_curve(run_dir: Path, column: str) -> tuple[np.ndarray, np.ndarray]:
    """(steps, values) of one metrics column, undefined rows skipped."""
    rows = read_rows(run_dir / METRICS_FILE)
    pts = [(r["global_step"], r[column]) for r in rows if r.get(column) is not None]
    if not pts:
        return np.array([]), np.array([])
    steps, vals = zip(*sorted(pts))
    return np.array(steps), np.array(vals)


def aggregate(curves: list[tuple[np.ndarray, np.ndarray]], window: int):
    """Smooth each run, align ragged step grids, return (grid, mean, std).

    The grid is the sorted union of all runs' steps; each run contributes
    only inside its own defined span (no zero-filling outside it), and the
    band is the population standard deviation across contributing runs.
    """
    curves = [(s, v) for s, v in curves if s.size > 0]
    if not curves:
        return np.array([]), np.array([]), np.array([])
    grid = np.unique(np.concatenate([s for s, _ in curves]))
    stacks = np.full((len(curves), grid.size), np.nan)
    for i, (s, v) in enumerate(curves):
        sm = smooth(v, window)
        inside = (grid >= s[0]) & (grid <= s[-1])
        stacks[i, inside] = np.interp(grid[inside], s, sm)
    have = ~np.isnan(stacks)
    counts = have.sum(axis=0)
    keep = counts > 0
    sums = np.nansum(stacks, axis=0)
    mean = sums[keep] / counts[keep]
    sq = np.nansum(stacks**2, axis=0)
    var = np.maximum(sq[keep] / counts[keep] - mean**2, 0.0)
    return grid[keep], mean, np.sqrt(var)


def dump_series(path: str | Path, series: dict) -> None:
    """Write computed series as JSON for test inspection."""
    payload = {
        label: {"step": list(map(float, s)), "mean": list(map(float, m)),
                "std": list(map(float, d))}
        for label, (s, m, d) in series.items()
    }
    Path(path).write_text(json.dumps(payload, indent=2))


def parse_run_groups(runs: list[str], labels: list[str]) -> list[tuple[str, list[Path]]]:
    """Pair each label with its comma-separated group of run directories."""
    if len(runs) != len(labels):
        raise ValueError(f"{len(runs)} run groups but {len(labels)} labels")
    return [(label, [Path(p) for p in group.split(",") if p])
            for label, group in zip(labels, runs)]

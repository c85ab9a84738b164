"""Diagnostics panels from metrics.csv: refresher and replay-usage behavior."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .series import aggregate, dump_series, metric_curve

PANELS = [
    ("refresher success rate", ["success_rate"]),
    ("return of refreshed rollouts", ["mean_gnew", "mean_g"]),
    ("sample usage ratios", ["batch_ratio_D", "batch_ratio_R",
                             "sil_ratio_D", "sil_ratio_R"]),
    ("return of used samples", ["used_return_D", "used_return_R"]),
]


def build_series(run_dirs: list[Path], window: int) -> dict:
    """One aggregated (step, mean, std) series per metrics column."""
    out = {}
    for _, columns in PANELS:
        for col in columns:
            curves = [metric_curve(d, col) for d in run_dirs]
            out[col] = aggregate(curves, window)
    return out


def render(series: dict, out_path: str) -> None:
    fig, axes = plt.subplots(2, 2, figsize=(11, 7))
    for ax, (title, columns) in zip(axes.ravel(), PANELS):
        drew = False
        for i, col in enumerate(columns):
            steps, mean, std = series[col]
            if steps.size == 0:
                continue  # undefined throughout: skip, never draw zeros
            ax.plot(steps, mean, label=col, color=f"C{i}")
            ax.fill_between(steps, mean - std, mean + std, color=f"C{i}",
                            alpha=0.25, linewidth=0)
            drew = True
        ax.set_title(title)
        ax.set_xlabel("global steps")
        if drew:
            ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plot-diagnostics",
        description="Multi-panel training diagnostics from metrics.csv")
    parser.add_argument("--runs", nargs="+", required=True,
                        help="run directories (aggregated as seeds)")
    parser.add_argument("--window", type=int, default=5)
    parser.add_argument("--out", required=True)
    parser.add_argument("--dump-series", default=None)
    args = parser.parse_args(argv)
    try:
        series = build_series([Path(p) for p in args.runs], args.window)
        if args.dump_series:
            dump_series(args.dump_series, series)
        render(series, args.out)
    except (FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

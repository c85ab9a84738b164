"""Learning-curve figure: mean episodic reward across seeds, std band."""

from __future__ import annotations

import argparse
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .series import aggregate, dump_series, eval_curve, parse_run_groups


def build_series(groups, window: int) -> dict:
    out = {}
    for label, run_dirs in groups:
        if not run_dirs:
            raise ValueError(f"label {label!r} has no run directories")
        out[label] = aggregate([eval_curve(d) for d in run_dirs], window)
    return out


def render(series: dict, colors, out_path: str) -> None:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for i, (label, (steps, mean, std)) in enumerate(series.items()):
        color = colors[i] if colors and i < len(colors) else f"C{i}"
        ax.plot(steps, mean, label=label, color=color)
        ax.fill_between(steps, mean - std, mean + std, color=color, alpha=0.25,
                        linewidth=0)
    ax.set_xlabel("global steps")
    ax.set_ylabel("mean episodic reward")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plot-learning-curves",
        description="Mean episodic reward across seeds with a std band")
    parser.add_argument("--runs", nargs="+", required=True,
                        metavar="DIR[,DIR...]",
                        help="one comma-separated group of run dirs per label")
    parser.add_argument("--labels", nargs="+", required=True)
    parser.add_argument("--colors", nargs="*", default=None)
    parser.add_argument("--window", type=int, default=5,
                        help="centered moving-average window (eval points)")
    parser.add_argument("--out", required=True, help="image file to write")
    parser.add_argument("--dump-series", default=None,
                        help="also write the computed series as JSON")
    args = parser.parse_args(argv)
    try:
        groups = parse_run_groups(args.runs, args.labels)
        series = build_series(groups, args.window)
        if args.dump_series:
            dump_series(args.dump_series, series)
        render(series, args.colors, args.out)
    except (FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

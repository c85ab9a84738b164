"""Command-line entry points.

Subcommands: train (full orchestrated run into a run directory), eval
(greedy evaluation of a checkpoint), collect-demos / pretrain-bc (the
behavior-cloning pipeline), and ttest (one-tailed Welch test over two
per-episode-reward CSV files).  Exit codes: 0 success, 1 usage error,
2 runtime failure.
"""

from __future__ import annotations

import argparse
import sys

from .analysis import evaluate, welch_one_tailed
from .config import parse_config
from .net import load_checkpoint, save_checkpoint
from .pretrain import (collect_demos, load_demos, policy_from_params,
                       save_demos, scripted_policy, train_bc)
from .runlog import EVAL_COLUMNS, CsvLog, read_csv
from .workers import orchestrate


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse default exits with status 2
        raise UsageError(message)


def _split_sets(pairs: list[str]) -> dict[str, str]:
    out = {}
    for pair in pairs:
        if "=" not in pair:
            raise UsageError(f"--set expects key=value, got {pair!r}")
        key, _, value = pair.partition("=")
        out[key.strip()] = value.strip()
    return out


def _load_config(args) -> "RunConfig":
    try:
        return parse_config(args.config, _split_sets(args.set))
    except FileNotFoundError as exc:
        raise UsageError(f"config file not found: {exc.filename}") from exc
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def build_parser() -> _Parser:
    parser = _Parser(prog="refreshrl",
                     description="Actor-critic training with replay refreshing")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config_args(p):
        p.add_argument("--config", default=None, help="flat key=value config file")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="config override (repeatable; beats the file)")

    p = sub.add_parser("train", help="run one training job")
    add_config_args(p)
    p.add_argument("--out", required=True, help="run directory to create")

    p = sub.add_parser("eval", help="greedy evaluation of a checkpoint")
    add_config_args(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--episodes", type=int, default=20)
    p.add_argument("--out", default=None, help="optional eval CSV to write")

    p = sub.add_parser("collect-demos", help="roll demonstration episodes")
    add_config_args(p)
    p.add_argument("--policy", default="right",
                   help="right | random | checkpoint:PATH")
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--episodes", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="demo file to write")

    p = sub.add_parser("pretrain-bc", help="train a behavior-cloning policy")
    add_config_args(p)
    p.add_argument("--demos", required=True)
    p.add_argument("--steps", type=int, default=5000)
    p.add_argument("--batch", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lr", type=float, default=5e-4)
    p.add_argument("--out", required=True, help="checkpoint to write")

    p = sub.add_parser("ttest", help="one-tailed Welch test: mean(a) > mean(b)")
    p.add_argument("csv_a")
    p.add_argument("csv_b")
    p.add_argument("--final-only", action="store_true",
                   help="use only rows at each file's final global_step")
    return parser


def _cmd_train(args) -> int:
    cfg = _load_config(args)
    result = orchestrate(cfg, args.out)
    print(f"run complete: mode={result.mode} seed={result.seed} "
          f"steps={result.final_step} eval_mean={result.final_eval_mean}")
    return 0


def _cmd_eval(args) -> int:
    cfg = _load_config(args)
    params, _ = load_checkpoint(args.checkpoint)
    mean, std, rewards = evaluate(params, cfg.env_factory(), args.episodes,
                                  seed=cfg.seed)
    print(f"episodes={len(rewards)} mean={mean} std={std}")
    if args.out:
        log = CsvLog(args.out, EVAL_COLUMNS)
        for i, r in enumerate(rewards):
            log.write(0, cfg.seed, "eval", i, r)
        log.close()
    return 0


def _cmd_collect_demos(args) -> int:
    cfg = _load_config(args)
    if args.policy.startswith("checkpoint:"):
        params, _ = load_checkpoint(args.policy.split(":", 1)[1])
        policy = policy_from_params(params, greedy=True)
    else:
        policy = scripted_policy(args.policy, noise=args.noise)
    demos = collect_demos(policy, cfg.env_factory(), args.episodes, args.seed,
                          tb=cfg.tb())
    save_demos(args.out, demos)
    mean = sum(sum(ep.rewards) for ep in demos.episodes) / len(demos.episodes)
    print(f"episodes={len(demos.episodes)} steps={demos.n_steps} mean_reward={mean}")
    return 0


def _cmd_pretrain_bc(args) -> int:
    cfg = _load_config(args)
    demos = load_demos(args.demos, tb=cfg.tb())
    params = train_bc(demos, steps=args.steps, batch=args.batch, seed=args.seed,
                      lr=args.lr)
    save_checkpoint(args.out, params)
    print(f"trained {args.steps} steps on {demos.n_steps} demo steps -> {args.out}")
    return 0


def _rewards_from_csv(path: str, final_only: bool) -> list[float]:
    rows = read_csv(path)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    if final_only:
        last = max(r["global_step"] for r in rows)
        rows = [r for r in rows if r["global_step"] == last]
    return [r["episodic_reward"] for r in rows]


def _cmd_ttest(args) -> int:
    a = _rewards_from_csv(args.csv_a, args.final_only)
    b = _rewards_from_csv(args.csv_b, args.final_only)
    t, df, p = welch_one_tailed(a, b)
    print(f"t={t} df={df} p={p}")
    return 0


_COMMANDS = {
    "train": _cmd_train,
    "eval": _cmd_eval,
    "collect-demos": _cmd_collect_demos,
    "pretrain-bc": _cmd_pretrain_bc,
    "ttest": _cmd_ttest,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"missing input: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - runtime failure boundary
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

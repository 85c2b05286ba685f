"""Command-line harness: train, eval, export, compare.

Exit codes: 0 success, 1 configuration error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from pathlib import Path

import numpy as np

from .agent import evaluate, train
from .config import ExperimentConfig, build_env, load_config, save_config
from .errors import ConfigError
from .qnet import load_params, save_params
from .reporting import export_waterfall_pgm, report_rows, write_metrics_csv

SUMMARY_WINDOW = 2_000


def _apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    if getattr(args, "jammer", None):
        cfg = dataclasses.replace(cfg, jammer=dataclasses.replace(cfg.jammer, kind=args.jammer))
    if getattr(args, "seed", None) is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    if getattr(args, "epochs", None) is not None:
        cfg = dataclasses.replace(cfg, epochs=args.epochs)
    if getattr(args, "out", None):
        cfg = dataclasses.replace(cfg, out_dir=args.out)
    return cfg


def _load(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    return _apply_overrides(cfg, args)


def _histogram_stats(hist: np.ndarray) -> tuple[float, float]:
    """Max probability and Shannon entropy (nats) of an action histogram."""
    p = hist[hist > 0]
    entropy = float(-(p * np.log(p)).sum()) if p.size else 0.0
    return float(hist.max()) if hist.size else 0.0, entropy


def run_experiment(cfg: ExperimentConfig) -> dict:
    """Train, evaluate against baselines, and write all run artifacts."""
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    env = build_env(cfg)

    snapshots = tuple(sorted({0, cfg.epochs // 2, cfg.epochs}))
    report = train(env, cfg.training, cfg.epochs, cfg.seed, snapshot_epochs=snapshots)

    write_metrics_csv(report_rows(report), out / "metrics.csv")
    save_params(report.params, out / "checkpoint.qnet")
    snapshot_names = {}
    for label, epoch in (("initial", 0), ("mid", cfg.epochs // 2), ("final", cfg.epochs)):
        name = f"waterfall_{label}.pgm"
        export_waterfall_pgm(report.snapshots[epoch], out / name)
        snapshot_names[label] = name

    # Baselines share one evaluation seed so every policy faces the same
    # exogenous jamming realization.
    eval_seed = np.random.SeedSequence([cfg.seed, 1])
    evals = {
        "greedy": evaluate(build_env(cfg), "greedy", cfg.eval_epochs, eval_seed,
                           params=report.params),
        "random": evaluate(build_env(cfg), "random", cfg.eval_epochs, eval_seed),
    }
    fixed = [evaluate(build_env(cfg), "fixed", cfg.eval_epochs, eval_seed, fixed_action=a)
             for a in range(env.n_actions)]
    best_fixed_action = int(np.argmax([e.mean_throughput for e in fixed]))

    window = min(SUMMARY_WINDOW, cfg.epochs)
    train_hist = report.action_histogram(last=window)
    max_prob, entropy = _histogram_stats(train_hist)
    summary = {
        "jammer": cfg.jammer.kind,
        "seed": cfg.seed,
        "epochs": cfg.epochs,
        "eval_epochs": cfg.eval_epochs,
        "train": {
            "window": window,
            "trailing_throughput": report.trailing_throughput(window) if cfg.epochs else 0.0,
            "trailing_reward": float(np.mean(report.reward[-window:])) if cfg.epochs else 0.0,
            "max_action_prob": max_prob,
            "action_entropy": entropy,
            "action_histogram": [float(v) for v in train_hist],
            "final_epsilon": float(report.epsilon[-1]) if cfg.epochs else 1.0,
        },
        "eval": {
            name: {
                "throughput": e.mean_throughput,
                "reward": e.mean_reward,
                "max_action_prob": float(e.action_histogram.max()),
                "action_histogram": [float(v) for v in e.action_histogram],
            }
            for name, e in evals.items()
        },
        "best_fixed": {
            "action": best_fixed_action,
            "throughput": fixed[best_fixed_action].mean_throughput,
            "reward": fixed[best_fixed_action].mean_reward,
        },
        "files": {"metrics": "metrics.csv", "checkpoint": "checkpoint.qnet",
                  **snapshot_names},
    }
    with open(out / "summary.json", "w", encoding="ascii") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    save_config(cfg, out / "config.ini")
    return summary


def _acceptance_flag(summary: dict) -> str:
    """Per-pattern convergence check used by the compare table."""
    kind = summary["jammer"]
    greedy = summary["eval"]["greedy"]["throughput"]
    rand = summary["eval"]["random"]["throughput"]
    if kind == "comb":
        ok = summary["train"]["trailing_throughput"] >= 0.90
    elif kind == "sweep":
        ok = greedy >= 0.75 and greedy >= 1.5 * rand
    elif kind == "random":
        ok = greedy >= rand + 0.15
    elif kind == "intelligent":
        uniform_cap = 0.90 * math.log(len(summary["train"]["action_histogram"]))
        ok = (summary["train"]["max_action_prob"] <= 0.25
              and summary["train"]["action_entropy"] >= uniform_cap
              and greedy >= rand)
    else:
        return "-"
    return "PASS" if ok else "FAIL"


def compare_runs(paths: list) -> str:
    """Tabulate finished runs; raises if a run is missing its artifacts."""
    if not paths:
        raise ConfigError("compare needs at least one run directory")
    header = f"{'run':<28} {'jammer':<12} {'greedy':>8} {'random':>8} " \
             f"{'reward':>8} {'max_p':>7} {'flag':>6}"
    lines = [header, "-" * len(header)]
    for path in paths:
        run = Path(path)
        for required in ("metrics.csv", "summary.json"):
            if not (run / required).exists():
                raise FileNotFoundError(f"{run / required} is missing")
        with open(run / "summary.json", "r", encoding="ascii") as fh:
            summary = json.load(fh)
        lines.append(
            f"{run.name:<28} {summary['jammer']:<12} "
            f"{summary['eval']['greedy']['throughput']:>8.4f} "
            f"{summary['eval']['random']['throughput']:>8.4f} "
            f"{summary['eval']['greedy']['reward']:>8.4f} "
            f"{summary['eval']['greedy']['max_action_prob']:>7.3f} "
            f"{_acceptance_flag(summary):>6}"
        )
    return "\n".join(lines)


def _cmd_train(args) -> int:
    cfg = _load(args)
    summary = run_experiment(cfg)
    print(f"run written to {cfg.out_dir}")
    print(f"trailing training throughput: {summary['train']['trailing_throughput']:.4f}")
    print(f"greedy eval throughput:       {summary['eval']['greedy']['throughput']:.4f}")
    print(f"random baseline throughput:   {summary['eval']['random']['throughput']:.4f}")
    return 0


def _cmd_eval(args) -> int:
    cfg = _load(args)
    env = build_env(cfg)
    params = None
    if args.policy == "greedy":
        if not args.checkpoint:
            raise ConfigError("greedy evaluation requires --checkpoint")
        params = load_params(args.checkpoint)
    fixed_action = args.fixed_action if args.policy == "fixed" else None
    result = evaluate(env, args.policy, cfg.eval_epochs, cfg.seed,
                      params=params, fixed_action=fixed_action)
    print(f"policy={result.policy} throughput={result.mean_throughput:.4f} "
          f"reward={result.mean_reward:.4f}")
    print("action histogram: " + " ".join(f"{p:.3f}" for p in result.action_histogram))
    return 0


def _cmd_export(args) -> int:
    cfg = _load(args)
    env = build_env(cfg)
    state = env.reset(cfg.seed)
    target = Path(args.out or "waterfall.pgm")
    if target.parent and not target.parent.exists():
        target.parent.mkdir(parents=True, exist_ok=True)
    export_waterfall_pgm(state, target)
    print(f"wrote {target}")
    return 0


def _cmd_compare(args) -> int:
    print(compare_runs(args.runs))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="antijam",
        description="Spectrum-waterfall anti-jamming: training and evaluation harness.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="INI config file (defaults apply if omitted)")
        p.add_argument("--seed", type=int, help="override [run] seed")
        p.add_argument("--jammer", choices=("sweep", "comb", "random", "intelligent", "none"),
                       help="override jammer kind")

    p_train = sub.add_parser("train", help="train a policy and write run artifacts")
    common(p_train)
    p_train.add_argument("--epochs", type=int, help="override training epochs")
    p_train.add_argument("--out", help="override output directory")
    p_train.set_defaults(func=_cmd_train)

    p_eval = sub.add_parser("eval", help="evaluate a policy on a fresh environment")
    common(p_eval)
    p_eval.add_argument("--checkpoint", help="network checkpoint for greedy policy")
    p_eval.add_argument("--policy", default="greedy", choices=("greedy", "random", "fixed"))
    p_eval.add_argument("--fixed-action", type=int, default=0,
                        help="action index for the fixed policy")
    p_eval.set_defaults(func=_cmd_eval)

    p_export = sub.add_parser("export", help="render the initial jammed waterfall to PGM")
    common(p_export)
    p_export.add_argument("--out", help="output PGM path (default waterfall.pgm)")
    p_export.set_defaults(func=_cmd_export)

    p_cmp = sub.add_parser("compare", help="summarize finished run directories")
    p_cmp.add_argument("runs", nargs="+", help="run directories to compare")
    p_cmp.set_defaults(func=_cmd_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Command line entry point: ``tddr run | converge | aggregate``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, UsageError
from .harness import (aggregate, aggregate_dir, emit, load_config, parse_mdp_ref, parse_overrides,
                      run_experiment)
from .mdp import value_iteration
from .tabular import run_convergence


def _seeds(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tddr", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="train deep agents over several seeds")
    run.add_argument("--config", type=Path, help="INI-style key = value file")
    run.add_argument("--preset", choices=["desk", "paper-protocol"])
    run.add_argument("--task")
    run.add_argument("--regularizer", choices=["ddpg", "td3", "darc", "minda", "tddr"])
    run.add_argument("--seeds", type=_seeds)
    run.add_argument("--steps", type=int, dest="total_steps")
    run.add_argument("--out")
    run.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                     help="override any config key, e.g. --set hidden=64,64")

    conv = sub.add_parser("converge", help="tabular double Q-learning convergence trace")
    conv.add_argument("--mdp", required=True, help="path to an MDP JSON file or random:S,A,seed")
    conv.add_argument("--pattern", choices=["random", "simultaneous"], default="random")
    conv.add_argument("--selector", choices=["tddr", "fixed1", "fixed2"], default="tddr")
    conv.add_argument("--scheme", choices=["min", "classic"], default="min")
    conv.add_argument("--steps", type=int, default=500_000)
    conv.add_argument("--seed", type=int, default=0)
    conv.add_argument("--gamma", type=float, default=0.9, help="discount for random MDPs")
    conv.add_argument("--omega", type=float, default=0.8)
    conv.add_argument("--checkpoint-every", type=int, default=1000)
    conv.add_argument("--out", required=True)

    agg = sub.add_parser("aggregate", help="re-aggregate per-seed CSVs in a run directory")
    agg.add_argument("--in", dest="in_dir", required=True)
    agg.add_argument("--window", type=int, default=5)
    agg.add_argument("--final-k", type=int, default=10)
    return parser


def cmd_run(args) -> int:
    overrides = {}
    for item in args.set:
        if "=" not in item:
            raise ConfigurationError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        overrides[key] = value
    overrides = parse_overrides(overrides)
    overrides.update({k: getattr(args, k) for k in ("task", "regularizer", "seeds", "total_steps", "out")
                      if getattr(args, k) is not None})
    cfg = load_config(args.config, overrides, preset=args.preset)
    records = run_experiment(cfg)
    report = aggregate(records, cfg.window, cfg.final_k)
    out = emit(report, records, cfg.out, cfg)
    for r in records:
        tail = f" ({r.diagnostic})" if r.diagnostic else ""
        print(f"seed {r.seed}: {r.status}, last value {r.values[-1]:.3f}{tail}")
    print(f"final-{cfg.final_k} mean {report.final_mean:.3f} +/- {report.final_std:.3f}; wrote {out}")
    return 0 if all(r.status == "ok" for r in records) else 1


def cmd_converge(args) -> int:
    mdp = parse_mdp_ref(args.mdp, args.gamma)
    q_star = value_iteration(mdp, 1e-10)
    trace = run_convergence(mdp, args.pattern, args.selector, args.steps, args.seed,
                            args.checkpoint_every, args.omega, args.scheme, q_star=q_star)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    trace.to_csv(out / "trace.csv")
    mdp.save(out / "mdp.json")
    last = trace.rows[-1] if trace.rows else {}
    summary = {
        "pattern": args.pattern, "selector": args.selector, "scheme": args.scheme,
        "steps": args.steps, "seed": args.seed, "omega": args.omega,
        "q_star_inf": float(np.max(np.abs(q_star))),
        "final_deltaBA_inf": last.get("deltaBA_inf"),
        "final_deltaA_inf": last.get("deltaA_inf"),
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(f"|Q^A - Q^B| = {summary['final_deltaBA_inf']}, |Q^A - Q*| = {summary['final_deltaA_inf']}, "
          f"|Q*| = {summary['q_star_inf']:.4f}; wrote {out}")
    return 0


def cmd_aggregate(args) -> int:
    report = aggregate_dir(args.in_dir, args.window, args.final_k)
    print(f"{len(report.seeds)} seeds, {len(report.steps)} checkpoints; "
          f"final-{report.final_k} mean {report.final_mean:.3f} +/- {report.final_std:.3f}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"run": cmd_run, "converge": cmd_converge, "aggregate": cmd_aggregate}[args.command]
    try:
        return handler(args)
    except (ConfigurationError, UsageError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point: ``ecnplan run <config>``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import StageError
from .scenario import load_config, replication_seeds, run_pipeline


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ecnplan", description="Emergency network and UAV flight planner")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run the full pipeline from an INI config")
    run.add_argument("config", help="INI file with [scenario], [radio], [uav] and [moea] sections")
    run.add_argument("--seed", type=int)
    run.add_argument("--out")
    run.add_argument("--skip-moea", action="store_true", help="stop after one evaluation at (--x1, --x2)")
    run.add_argument("--x1", type=int, help="UAV count for the single evaluation")
    run.add_argument("--x2", type=float, help="caching-centre transmit power (mW) for the single evaluation")
    run.add_argument("--verbatim-alg1", action="store_true", help="place devices on the circle of radius r")
    run.add_argument("--emit-plots", action="store_true", help="write CSV series for plotting")
    run.add_argument("--replications", type=int, default=1, help="independent runs with derived seeds")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {"seed": args.seed, "out": args.out, "x1": args.x1, "x2": args.x2,
                 "skip_moea": True if args.skip_moea else None,
                 "verbatim_alg1": True if args.verbatim_alg1 else None,
                 "emit_plots": True if args.emit_plots else None}
    try:
        cfg = load_config(args.config, **overrides)
    except (OSError, ValueError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.replications < 1:
        print("--replications must be at least 1", file=sys.stderr)
        return 2
    runs = [(cfg, Path(cfg.out))]
    if args.replications > 1:
        runs = [(cfg.with_(seed=s), Path(cfg.out) / f"rep{k:03d}")
                for k, s in enumerate(replication_seeds(cfg.seed, args.replications))]
    for run_cfg, out in runs:
        try:
            res = run_pipeline(run_cfg, out)
        except StageError as exc:
            out.mkdir(parents=True, exist_ok=True)
            report = {"stage": exc.stage, "error": f"{type(exc.cause).__name__}: {exc.cause}",
                      "inputs": exc.inputs, "seed": run_cfg.seed}
            (out / "failure.json").write_text(json.dumps(report, indent=1, sort_keys=True, default=str) + "\n")
            print(f"[{exc.stage}] {report['error']}", file=sys.stderr)
            return 1
        s = res.summary
        knee = s["knee"] or s["single_evaluation"]
        print(f"{out}: communities={s['community_count']} tdccs={s['tdcc_count']} "
              f"x1={knee['x1']} x2={knee['x2']:.3f} f1={knee['f1']:.2f}s f2={knee['f2']:.0f}J")
    return 0


if __name__ == "__main__":
    sys.exit(main())

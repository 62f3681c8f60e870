"""Command-line front door.

Subcommands: prep, train, bench, gradcheck, report.  Exit codes: 0 success,
1 internal error, 2 input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import harness
from .errors import InputError


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="relrep")
    sub = parser.add_subparsers(dest="command", required=True)

    p_prep = sub.add_parser("prep", help="parse a SemEval corpus file into the internal dataset JSON")
    p_prep.add_argument("corpus")
    p_prep.add_argument("out")
    p_prep.add_argument("--direction-policy", choices=("collapse", "keep"), default="collapse")

    p_train = sub.add_parser("train", help="one seeded training run")
    p_train.add_argument("--config", required=True)
    p_train.add_argument("--seed", type=int, default=None)
    p_train.add_argument("--stack", default=None, help="stack name (default: first in config)")
    p_train.add_argument("--out", default=None)
    p_train.add_argument("--dump-config", action="store_true")

    p_bench = sub.add_parser("bench", help="multi-seed sweep over all configured stacks")
    p_bench.add_argument("--config", required=True)
    p_bench.add_argument("--seeds", default=None, help="comma-separated seed list override")
    p_bench.add_argument("--out", default=None)
    p_bench.add_argument("--workers", type=int, default=None)
    p_bench.add_argument("--dump-config", action="store_true")

    p_grad = sub.add_parser("gradcheck", help="finite-difference check of the gradients")
    p_grad.add_argument("--seed", type=int, default=7)
    p_grad.add_argument("--h", type=float, default=None,
                        help="finite-difference step (default 1e-5; 1e-2 in toy mode)")
    p_grad.add_argument("--tolerance", type=float, default=1e-4)
    p_grad.add_argument("--toy-linear", action="store_true",
                        help="check the harness itself on an exactly linear map")

    p_report = sub.add_parser("report", help="regenerate report files from run outputs")
    p_report.add_argument("--out", required=True)
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return _dispatch(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


def _dispatch(args) -> int:
    if args.command == "prep":
        dataset = harness.run_prep(args.corpus, args.out, args.direction_policy)
        print(f"{len(dataset.sentences)} sentences, {len(dataset.labels)} classes "
              f"-> {args.out}")
        return 0

    if args.command == "train":
        cfg = harness.load_config(args.config, {"out": args.out})
        if args.dump_config:
            print(json.dumps(cfg, sort_keys=True, indent=1))
            return 0
        stack_name = args.stack or cfg["stacks"][0]["name"]
        seed = args.seed if args.seed is not None else cfg["seeds"][0]
        out_dir = Path(cfg["out"]) / stack_name / f"seed{seed}"
        metrics = harness.run_single(cfg, stack_name, seed, out_dir)
        print(f"{stack_name} seed {seed}: P={metrics['P']:.4f} "
              f"R={metrics['R']:.4f} F1={metrics['F1']:.4f}")
        return 0

    if args.command == "bench":
        overrides = {"out": args.out, "workers": args.workers}
        if args.seeds:
            overrides["seeds"] = [int(s) for s in args.seeds.split(",")]
        cfg = harness.load_config(args.config, overrides)
        if args.dump_config:
            print(json.dumps(cfg, sort_keys=True, indent=1))
            return 0
        manifest = harness.run_bench(cfg)
        print(f"bench complete: {len(manifest['stacks'])} stacks, "
              f"{len(cfg['seeds'])} seeds, reports in {cfg['out']}")
        return 0

    if args.command == "gradcheck":
        err, ok = harness.run_gradcheck(args.seed, args.h, args.tolerance,
                                        args.toy_linear)
        label = "toy-linear" if args.toy_linear else "full model"
        print(f"gradcheck ({label}): max relative error {err:.3e} "
              f"({'PASS' if ok else 'FAIL'} at {args.tolerance:g})")
        return 0 if ok else 1

    if args.command == "report":
        reports = harness.regenerate_reports(args.out)
        print(f"rewrote reports for {len(reports)} stacks in {args.out}")
        return 0

    raise InputError(f"unknown command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())

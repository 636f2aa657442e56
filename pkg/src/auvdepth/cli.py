"""Command-line interface for the depth-control workbench.

Exit codes: 0 success, 2 bad configuration or usage, 3 file-system trouble,
4 training blew up, 5 anything unexpected.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from .config import default_config, load_config
from .harness import (generate_seafloor, run_baseline, run_compare,
                      run_evaluate, run_train, run_window_sweep)
from .trainer import TrainingAbort


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="auvdepth",
        description="Train and benchmark depth controllers for a small AUV.")
    p.add_argument("--config", metavar="PATH",
                   help="YAML experiment config (defaults apply if omitted)")
    p.add_argument("--seed", type=int, metavar="N",
                   help="replace the config's seed list with this one seed")
    p.add_argument("--out-dir", metavar="DIR",
                   help="override the config's output directory")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("train", help="train one policy per configured seed")

    ev = sub.add_parser("evaluate",
                        help="roll a trained policy and tabulate metrics")
    ev.add_argument("--episodes", type=int, default=10)

    bl = sub.add_parser("baseline", help="roll a model-based controller")
    bl.add_argument("controller", choices=("lqi", "nmpc"))

    sub.add_parser("compare",
                   help="learned policy vs both baselines under shared "
                        "disturbances, one run per seed")

    ws = sub.add_parser("window-sweep",
                        help="train and score one policy per seafloor "
                             "window size")
    ws.add_argument("--sizes", default="1,3,5,7,9",
                    help="comma-separated window sizes")
    ws.add_argument("--episodes", type=int, default=10,
                    help="evaluation episodes per window size")

    gs = sub.add_parser("gen-seafloor",
                        help="synthesize a seafloor profile CSV")
    gs.add_argument("--path", required=True, help="output CSV path")
    gs.add_argument("--length", type=float, default=600.0)
    gs.add_argument("--spacing", type=float, default=1.0)
    gs.add_argument("--base-depth", type=float, default=12.0)
    gs.add_argument("--amplitude", type=float, default=2.0)
    gs.add_argument("--kind", choices=("sinusoid", "walk"),
                    default="sinusoid")
    gs.add_argument("--wavelength", type=float, default=100.0)
    gs.add_argument("--smooth", type=float, default=25.0)
    gs.add_argument("--seed", type=int, default=0, dest="gen_seed",
                    help="generator seed for the walk kind")
    return p


def _run(args: argparse.Namespace) -> int:
    if args.command == "gen-seafloor":
        report = generate_seafloor(
            args.path, length_m=args.length, spacing_m=args.spacing,
            base_depth=args.base_depth, amplitude=args.amplitude,
            kind=args.kind, wavelength=args.wavelength,
            smooth_m=args.smooth, seed=args.gen_seed)
        print(f"wrote {args.path}")
        for key, val in report.items():
            print(f"  {key}: {val}")
        return 0

    cfg = load_config(args.config) if args.config else default_config()
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seeds=(args.seed,))
    if args.out_dir:
        cfg = dataclasses.replace(cfg, out_dir=args.out_dir)

    if args.command == "train":
        written = run_train(cfg)
    elif args.command == "evaluate":
        written = run_evaluate(cfg, episodes=args.episodes)
    elif args.command == "baseline":
        written = run_baseline(cfg, args.controller)
    elif args.command == "compare":
        written = run_compare(cfg)
    else:
        sizes = tuple(int(s) for s in args.sizes.split(",") if s.strip())
        written = run_window_sweep(cfg, sizes=sizes,
                                   eval_episodes=args.episodes)
    print(f"wrote {len(written)} files under {cfg.out_dir}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _run(args)
    except TrainingAbort as exc:
        print(f"error: training: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"error: io: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"error: internal: {exc}", file=sys.stderr)
        return 5


if __name__ == "__main__":
    raise SystemExit(main())

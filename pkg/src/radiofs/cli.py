"""Command line entry point.

    radiofs run --config sweep.cfg [--out report.json] [--format json|csv] [--seed N]
    radiofs rank --train train.csv --family supervised [--out ranking.csv]
"""
from __future__ import annotations

import argparse
import sys

from . import anova, fusion
from .dataset import load_csv, zscore_normalize
from .errors import ConfigError, PipelineError, RadiofsError
from .experiment import ExperimentConfig, emit_report, rank_family, run_sweep


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="radiofs",
        description="Feature ranking, rank fusion and classifier sweeps.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the full k-sweep described by a config file")
    run.add_argument("--config", required=True, help="key = value config file")
    run.add_argument("--out", help="report path (default: stdout)")
    run.add_argument("--format", choices=("json", "csv"), default="json")
    run.add_argument("--seed", type=int, help="override the config seed")

    rank = sub.add_parser("rank", help="emit the fused ranking of one family as CSV")
    rank.add_argument("--train", required=True, help="labelled training CSV")
    rank.add_argument("--family", required=True,
                      choices=(fusion.SUPERVISED, fusion.UNSUPERVISED))
    rank.add_argument("--out", help="CSV path (default: stdout)")
    rank.add_argument("--alpha", type=float, default=0.05,
                      help="ANOVA significance level (default 0.05)")
    rank.add_argument("--no-filter", action="store_true", help="skip the ANOVA filter")
    rank.add_argument("--no-normalize", action="store_true", help="skip z-scoring")
    return parser


def _run(args):
    try:
        cfg = ExperimentConfig.from_file(args.config, seed=args.seed)
    except ConfigError as exc:
        raise PipelineError("config", exc) from exc
    report = run_sweep(cfg)
    text = emit_report(report, args.format, args.out)
    if args.out is None:
        sys.stdout.write(text)


def _rank(args):
    try:
        m = load_csv(args.train)
    except (RadiofsError, OSError) as exc:
        raise PipelineError("load", exc) from exc
    try:
        if not args.no_normalize:
            m, _ = zscore_normalize(m)
        if not args.no_filter:
            _, m = anova.filter_features(m, args.alpha)
    except RadiofsError as exc:
        raise PipelineError("anova", exc) from exc
    try:
        ranking = rank_family(m, args.family)
    except (RadiofsError, ValueError) as exc:
        raise PipelineError(f"rank:{args.family}", exc) from exc
    text = ranking.to_csv(args.out)
    if args.out is None:
        sys.stdout.write(text)


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            _run(args)
        else:
            _rank(args)
    except PipelineError as exc:
        print(f"radiofs: error {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

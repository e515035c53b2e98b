"""Standalone exporter. Speaks the same flag vocabulary as the toolkit CLI."""

from __future__ import annotations

import argparse
import sys

from .interchange import TASKS, ConfigError, DataError
from .recipes import RECIPES, ExportJob, export_embeddings, export_predictions


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aed-export",
        description="Export scikit-learn predictions and embeddings "
                    "in the aedkit interchange formats.")
    sub = parser.add_subparsers(dest="command", required=True)

    def shared(p):
        p.add_argument("--task", required=True, choices=TASKS)
        p.add_argument("--in", dest="inp", required=True, help="corpus file")
        p.add_argument("--out", required=True, help="output file")
        p.add_argument("--seed", type=int, default=0)

    pred = sub.add_parser("predictions", help="train under a fold file, export a bundle")
    shared(pred)
    pred.add_argument("--fold-file", required=True,
                      help="fold file written by the toolkit's train stage")
    pred.add_argument("--model", default="logreg",
                      help=f"recipe id ({', '.join(sorted(RECIPES))})")
    pred.add_argument("--kind", default="single",
                      help="single, repeated:T, or epochs:E")

    emb = sub.add_parser("embeddings", help="export unit-norm embedding vectors")
    shared(emb)
    emb.add_argument("--dim", type=int, default=64)
    return parser


def dispatch(args) -> None:
    if args.command == "predictions":
        job = ExportJob(task=args.task, corpus=args.inp, out=args.out,
                        fold_file=args.fold_file, recipe=args.model,
                        kind=args.kind, seed=args.seed)
        stats = export_predictions(job)
        line = f"wrote {args.out} ({stats['n_units']} units, {stats['kind']}, model={args.model})"
        if "disagreements" in stats:
            line += f" disagreements={stats['disagreements']}"
        print(line)
    else:
        job = ExportJob(task=args.task, corpus=args.inp, out=args.out,
                        seed=args.seed, dim=args.dim)
        stats = export_embeddings(job)
        print(f"wrote {args.out} ({stats['n_units']} units, dim={stats['dim']})")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        dispatch(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())

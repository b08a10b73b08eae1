import argparse
from pathlib import Path

from app.cli.common import add_common_arguments, prepare_run
from app.services.checkpoint import load_checkpoint
from app.services.corpus import load_corpus
from app.services.metrics import evaluate, report_to_frame, write_report


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("eval", help="Evaluate a checkpoint on a corpus")
    add_common_arguments(parser)
    parser.add_argument("--corpus", type=Path, required=True, help="Corpus file")
    parser.add_argument("--checkpoint", type=Path, required=True, help="Checkpoint file")
    parser.add_argument("--threshold", type=float, default=None, help="F1 binarisation threshold")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    _, run_dir = prepare_run(args)
    report = evaluate(load_checkpoint(args.checkpoint), load_corpus(args.corpus), args.threshold)
    write_report(report, run_dir)
    print(report_to_frame(report).to_string(index=False))
    return 0

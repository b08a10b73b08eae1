import argparse
from pathlib import Path

from app.cli.common import add_common_arguments, prepare_run
from app.services.ablation import SETTINGS, ablation_frame, run_ablation
from app.services.corpus import load_corpus


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("ablate", help="Train and compare the ablation settings")
    add_common_arguments(parser)
    parser.add_argument("--corpus", type=Path, required=True, help="Corpus file")
    parser.add_argument("--settings", nargs="+", choices=list(SETTINGS), default=None, help="Settings to run")
    parser.add_argument(
        "--seeds", nargs="+", type=int, default=None, help="Seeds to average over (default: the config seed)"
    )
    parser.add_argument("--eval-fraction", type=float, default=0.25, help="Held-out share per seed")
    parser.add_argument("--threshold", type=float, default=0.5, help="F1 binarisation threshold")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    config, run_dir = prepare_run(args)
    rows = run_ablation(
        load_corpus(args.corpus),
        config,
        settings=args.settings,
        seeds=args.seeds or [config.seed],
        eval_fraction=args.eval_fraction,
        threshold=args.threshold,
    )
    frame = ablation_frame(rows)
    frame.to_csv(run_dir / "ablation.csv", index=False)
    print(frame.to_string(index=False))
    return 0

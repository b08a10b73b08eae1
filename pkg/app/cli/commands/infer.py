import argparse
from pathlib import Path

import pandas as pd

from app.cli.common import add_common_arguments, prepare_run
from app.services.checkpoint import load_checkpoint
from app.services.corpus import load_corpus
from app.services.inference import infer


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("infer", help="Write per-record AU probabilities")
    add_common_arguments(parser)
    parser.add_argument("--corpus", type=Path, required=True, help="Corpus file (labels are ignored)")
    parser.add_argument("--checkpoint", type=Path, required=True, help="Checkpoint file")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    _, run_dir = prepare_run(args)
    corpus = load_corpus(args.corpus)
    probabilities = infer(corpus.features, load_checkpoint(args.checkpoint))

    frame = pd.DataFrame(probabilities, columns=[f"au{i}" for i in range(probabilities.shape[1])])
    frame.insert(0, "id", list(corpus.ids))
    path = run_dir / "predictions.csv"
    frame.to_csv(path, index=False)
    print(f"wrote {len(frame)} predictions to {path}")
    return 0

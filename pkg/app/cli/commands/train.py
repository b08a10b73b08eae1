import argparse
from pathlib import Path

from app.cli.common import add_common_arguments, prepare_run
from app.core.errors import ConfigurationError, ContractError
from app.core.logging import MetricsLog
from app.services.checkpoint import load_checkpoint, save_checkpoint
from app.services.corpus import load_corpus, split
from app.services.metrics import evaluate, write_report
from app.services.trainer import train_stage1, train_stage2


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("train", help="Two-stage training")
    add_common_arguments(parser)
    parser.add_argument("--corpus", type=Path, required=True, help="Corpus file")
    parser.add_argument("--stage", choices=["1", "2", "both"], default="both", help="Stage(s) to run")
    parser.add_argument(
        "--stage1-checkpoint",
        type=Path,
        default=None,
        help="Stage-1 checkpoint to start stage 2 from (required with --stage 2)",
    )
    parser.add_argument(
        "--eval-fraction",
        type=float,
        default=0.0,
        help="Share of records held out for the final report (0 = report on the training data)",
    )
    parser.add_argument("--threshold", type=float, default=None, help="F1 binarisation threshold")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    config, run_dir = prepare_run(args)
    if args.stage == "2" and args.stage1_checkpoint is None:
        raise ContractError("--stage 2 needs --stage1-checkpoint")
    if args.stage == "2" and not config.has_stage2:
        raise ConfigurationError("--stage 2 needs use_mefl = true")

    corpus = load_corpus(args.corpus)
    if args.eval_fraction > 0:
        train_part, eval_part = split(corpus, 1.0 - args.eval_fraction, config.seed)
    else:
        train_part = eval_part = corpus

    with MetricsLog(run_dir / "metrics.jsonl") as metrics_log:
        if args.stage == "2":
            checkpoint = load_checkpoint(args.stage1_checkpoint)
        else:
            checkpoint = train_stage1(train_part, config, metrics_log)
            save_checkpoint(checkpoint, run_dir / "stage1.ckpt")
        if args.stage != "1" and config.has_stage2:
            checkpoint = train_stage2(train_part, checkpoint, config, metrics_log)
            save_checkpoint(checkpoint, run_dir / "stage2.ckpt")

    report = evaluate(checkpoint, eval_part, args.threshold)
    write_report(report, run_dir)
    print(
        f"{checkpoint.stage} done: macro F1 {report.macro_f1}, "
        f"macro AUC {report.macro_auc} on {report.n_samples} records"
    )
    print(f"artifacts in {run_dir}")
    return 0

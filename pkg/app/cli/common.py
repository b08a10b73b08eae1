"""
Arguments and run-directory handling shared by every command.
"""
import argparse
import json
from datetime import datetime
from pathlib import Path
from typing import Tuple

import structlog

from app.core.config import build_train_config, parse_overrides, settings
from app.schemas.config import RunConfig, TrainConfig

logger = structlog.get_logger(__name__)


def add_common_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, default=None, help="Flat key = value config file")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="Override one config key (repeatable; wins over the config file)",
    )
    parser.add_argument(
        "--output-dir",
        type=Path,
        default=None,
        help="Run directory (default: <RUNS_DIR>/<timestamp>-seed<seed>)",
    )


def prepare_run(args: argparse.Namespace) -> Tuple[TrainConfig, Path]:
    """
    Resolve the effective config, create the run directory and write config.json into it.

    Raises:
        ConfigurationError: On an invalid config file, override or value
    """
    overrides = parse_overrides(args.overrides)
    config = build_train_config(args.config, overrides)
    run_dir = args.output_dir or Path(settings.RUNS_DIR) / f"{datetime.now():%Y%m%d-%H%M%S}-seed{config.seed}"
    run = RunConfig(command=args.command, config_path=args.config, overrides=overrides, output_dir=run_dir)

    run_dir.mkdir(parents=True, exist_ok=True)
    effective = {
        "command": run.command,
        "config_path": str(run.config_path) if run.config_path else None,
        "overrides": run.overrides,
        "config": config.model_dump(mode="json", by_alias=True),
    }
    (run_dir / "config.json").write_text(json.dumps(effective, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    structlog.contextvars.bind_contextvars(command=run.command, seed=config.seed)
    logger.info("run.prepared", output_dir=str(run_dir))
    return config, run_dir

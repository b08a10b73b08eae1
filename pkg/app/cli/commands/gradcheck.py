import argparse

from app.cli.common import add_common_arguments, prepare_run
from app.core.config import settings
from app.core.errors import NumericError
from app.services.gradcheck_suite import COMPONENTS, run_gradcheck


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("gradcheck", help="Check analytic gradients against finite differences")
    add_common_arguments(parser)
    parser.add_argument("--components", nargs="+", choices=list(COMPONENTS), default=None, help="Components to check")
    parser.add_argument("--corrupt-gradient", choices=list(COMPONENTS), default=None, help=argparse.SUPPRESS)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    config, _ = prepare_run(args)
    results = run_gradcheck(seed=config.seed, components=args.components, corrupt=args.corrupt_gradient)
    for r in results:
        print(f"{r.name:<10} max relative error {r.max_relative_error:.3e}  {'ok' if r.passed else 'FAIL'}")

    failed = [r.name for r in results if not r.passed]
    if failed:
        raise NumericError(
            f"gradient check above {settings.GRADCHECK_TOLERANCE:g} for: {', '.join(failed)}",
            {"components": failed},
        )
    return 0

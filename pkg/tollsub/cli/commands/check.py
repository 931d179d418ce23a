import argparse
import logging

from tollsub.cli.deps import add_common, add_grid, emit, grid_from, load_config, sweep_header
from tollsub.core.errors import TheoremViolation, UsageError
from tollsub.usecase.experiments import theorem1_check, theorem2_check

logger = logging.getLogger(__name__)

THEOREM1_BETAS = "0.2:0.8:0.2"
THEOREM2_QS = "0.25:1:0.25"


def register(subparsers) -> None:
    parser = subparsers.add_parser("check", help="empirical check of a toll-versus-subsidy ordering")
    parser.add_argument("--theorem", type=int, choices=(1, 2), help="1: bounded subsidy vs toll; 2: under heterogeneity")
    parser.add_argument("--beta-grid", help=f"β grid for --theorem 1 (default {THEOREM1_BETAS})")
    parser.add_argument("--q-grid", help=f"heterogeneity grid for --theorem 2 (default {THEOREM2_QS})")
    parser.add_argument("--beta", type=float, help="toll bound β⁺ for --theorem 2; the subsidy gets β⁺/(1+β⁺)")
    parser.add_argument("--sL", type=float, help="lower sensitivity for --theorem 2; sU = sL / q")
    add_grid(parser)
    add_common(parser)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    config = load_config(args, "theorem_check")
    if config.THEOREM is None:
        raise UsageError("check needs --theorem 1 or --theorem 2")
    grid = grid_from(config)
    if config.THEOREM == 1:
        frame = theorem1_check(config.beta_values(THEOREM1_BETAS), grid, config.RESTARTS, config.SEED, workers=config.WORKERS)
    else:
        frame = theorem2_check(
            config.q_values(THEOREM2_QS),
            config.BETA,
            config.S_LOWER,
            grid,
            config.RESTARTS,
            config.SEED,
            workers=config.WORKERS,
        )
    emit(frame, config, sweep_header(config, f"theorem_check {config.THEOREM}", grid))

    failed = frame[~frame["passed"]]
    if not failed.empty:
        raise TheoremViolation(
            f"theorem {config.THEOREM}: {len(failed)} of {len(frame)} grid points violate the ordering "
            f"(worst margin {failed['margin'].min():.3e})"
        )
    logger.info("theorem %d holds on all %d grid points (min margin %.3e)", config.THEOREM, len(frame), frame["margin"].min())
    return 0

"""Sweeps that regenerate the figure data as CSV."""

import argparse

from tollsub.cli.deps import add_common, add_grid, emit, grid_from, load_config, sweep_header
from tollsub.usecase.experiments import SMC_FORMULA_NOTE, fig1_sweep, fig2a_sweep, fig2b_sweep

FIG2A_BETAS = "0:1:0.05"
FIG2B_QS = "0.05:1:0.05"


def register(subparsers) -> None:
    fig1 = subparsers.add_parser("fig1", help="Pigou family under tightly bounded tolls and subsidies")
    fig1.add_argument("--beta-grid", help="β grid a:b:step (default 0:p_max:0.1)")
    fig1.add_argument("--p-max", type=int, help="largest Pigou degree (at most 6)")
    add_common(fig1)
    fig1.set_defaults(handler=run_fig1)

    fig2a = subparsers.add_parser("fig2a", help="optimal bounded toll and subsidy on affine games")
    fig2a.add_argument("--beta-grid", help=f"β grid a:b:step (default {FIG2A_BETAS})")
    add_grid(fig2a)
    add_common(fig2a)
    fig2a.set_defaults(handler=run_fig2a)

    fig2b = subparsers.add_parser("fig2b", help="scaled marginal-cost toll against its equivalent subsidy")
    fig2b.add_argument("--q-grid", help=f"heterogeneity grid a:b:step in (0, 1] (default {FIG2B_QS})")
    fig2b.add_argument("--sL", type=float, help="lower sensitivity; sU = sL / q")
    add_grid(fig2b)
    add_common(fig2b)
    fig2b.set_defaults(handler=run_fig2b)


def run_fig1(args: argparse.Namespace) -> int:
    config = load_config(args, "fig1_sweep")
    betas = config.beta_values(f"0:{config.P_MAX}:0.1")
    frame = fig1_sweep(betas, config.P_MAX, config.RESTARTS, config.SEED, workers=config.WORKERS)
    emit(frame, config, sweep_header(config, "fig1_sweep", None) + [f"pigou degrees 1..{config.P_MAX}"])
    return 0


def run_fig2a(args: argparse.Namespace) -> int:
    config = load_config(args, "fig2a_sweep")
    grid = grid_from(config)
    frame = fig2a_sweep(config.beta_values(FIG2A_BETAS), grid, config.RESTARTS, config.SEED, workers=config.WORKERS)
    emit(frame, config, sweep_header(config, "fig2a_sweep", grid))
    return 0


def run_fig2b(args: argparse.Namespace) -> int:
    config = load_config(args, "fig2b_sweep")
    grid = grid_from(config)
    frame = fig2b_sweep(
        config.q_values(FIG2B_QS),
        config.S_LOWER,
        grid,
        config.FULLY_UTILIZED,
        config.RESTARTS,
        config.SEED,
        workers=config.WORKERS,
    )
    emit(frame, config, sweep_header(config, "fig2b_sweep", grid) + [SMC_FORMULA_NOTE])
    return 0

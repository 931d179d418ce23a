import argparse
import logging
from typing import List, Optional

import pandas as pd

from tollsub.core.config import settings
from tollsub.core.errors import UsageError
from tollsub.models.game import GameInstance
from tollsub.models.sensitivity import SensitivityModel
from tollsub.repository.instance import load_instance
from tollsub.repository.results import csv_header, write_csv
from tollsub.schemas.experiment import ExperimentConfig
from tollsub.usecase.search import AffineGrid

logger = logging.getLogger(__name__)


class ArgumentParser(argparse.ArgumentParser):
    """argparse that reports usage problems as UsageError instead of exiting."""

    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


def add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="experiment file with KEY=value lines; flags override it")
    parser.add_argument("--out", help="CSV output path ('-' for standard output)")
    parser.add_argument("--restarts", type=int, help="random restarts for worst-case equilibria")
    parser.add_argument("--seed", type=int, help="seed of the restart generator")
    parser.add_argument("--workers", type=int, help="parallel workers for sweeps")


def add_sensitivity(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--sL", type=float, help="lower sensitivity bound")
    parser.add_argument("--sU", type=float, help="upper sensitivity bound")


def add_grid(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--coef-points", type=int, help="grid points per affine coefficient")
    parser.add_argument("--coef-max", type=float, help="largest affine coefficient on the grid")
    parser.add_argument("--mass-splits", type=int, help="class mass splits on the grid")


def load_config(args: argparse.Namespace, kind: str) -> ExperimentConfig:
    instances = getattr(args, "instance", None)
    return ExperimentConfig.load(
        getattr(args, "config", None),
        KIND=kind,
        INSTANCES=",".join(instances) if instances else None,
        MECH=getattr(args, "mech", None),
        BETA_GRID=getattr(args, "beta_grid", None),
        Q_GRID=getattr(args, "q_grid", None),
        P_MAX=getattr(args, "p_max", None),
        S_LOWER=getattr(args, "sL", None),
        S_UPPER=getattr(args, "sU", None),
        THEOREM=getattr(args, "theorem", None),
        BETA=getattr(args, "beta", None),
        RESTARTS=getattr(args, "restarts", None),
        SEED=getattr(args, "seed", None),
        WORKERS=getattr(args, "workers", None),
        COEF_POINTS=getattr(args, "coef_points", None),
        COEF_MAX=getattr(args, "coef_max", None),
        MASS_SPLITS=getattr(args, "mass_splits", None),
        OUT=getattr(args, "out", None),
    )


def grid_from(config: ExperimentConfig) -> AffineGrid:
    return AffineGrid(config.COEF_POINTS, config.COEF_MAX, config.MASS_SPLITS)


def load_instances(config: ExperimentConfig) -> List[GameInstance]:
    """Instances named by the config; an explicit --sU swaps in an even two-class population."""
    paths = config.instance_paths
    if not paths:
        raise UsageError("at least one --instance is required")
    instances = [load_instance(p) for p in paths]
    if config.S_UPPER is None:
        return instances
    population = SensitivityModel.two_class(config.S_LOWER, config.S_UPPER, mass_lower=0.5)
    return [inst.with_sensitivity(population) for inst in instances]


def sweep_header(config: ExperimentConfig, kind: str, grid: Optional[AffineGrid] = None) -> List[str]:
    details = [f"eps_eq={settings.EPS_EQ:g} restarts={config.RESTARTS} seed={config.SEED}"]
    if grid is not None:
        details.append(f"grid: {grid.describe()}")
    return csv_header(kind, *details)


def emit(frame: pd.DataFrame, config: ExperimentConfig, header: List[str]) -> None:
    if "uncertified" in frame and frame["uncertified"].any():
        logger.warning("%d rows are not certified within eps_eq", int(frame["uncertified"].sum()))
    write_csv(frame, config.OUT, header)

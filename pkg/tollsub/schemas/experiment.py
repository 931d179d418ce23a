from pathlib import Path
from typing import List, Literal, Optional, Tuple, Type

import numpy as np
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator
from pydantic_settings import BaseSettings, PydanticBaseSettingsSource, SettingsConfigDict

from tollsub.core.config import settings
from tollsub.core.error_handlers import instance_parse_error
from tollsub.core.errors import InstanceParseError

ExperimentKind = Literal["solve", "poa", "fig1_sweep", "fig2a_sweep", "fig2b_sweep", "theorem_check"]

MAX_DEGREE = 6


class GridSpec(BaseModel):
    """Closed grid `start:stop:step`."""

    start: float
    stop: float
    step: float = Field(gt=0)

    @model_validator(mode="after")
    def _check_range(self):
        if self.start > self.stop:
            raise ValueError(f"empty grid: start {self.start:g} > stop {self.stop:g}")
        return self

    @classmethod
    def parse(cls, text: str) -> "GridSpec":
        parts = [p.strip() for p in str(text).split(":")]
        if len(parts) == 1:
            return cls(start=parts[0], stop=parts[0], step=1.0)
        if len(parts) != 3:
            raise ValueError(f"grid must look like a:b:step, got '{text}'")
        return cls(start=parts[0], stop=parts[1], step=parts[2])

    def values(self) -> List[float]:
        count = int(np.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return [round(self.start + i * self.step, 12) for i in range(count)]

    def __str__(self) -> str:
        return f"{self.start:g}:{self.stop:g}:{self.step:g}"


def _grid_or_none(v: Optional[str]) -> Optional[str]:
    if v is None or v == "":
        return None
    GridSpec.parse(v)
    return str(v)


class ExperimentConfig(BaseSettings):
    """Experiment file (`KEY=value` lines) merged with command-line overrides."""

    KIND: ExperimentKind = "solve"
    INSTANCES: str = ""
    MECH: Optional[str] = None
    BETA_GRID: Optional[str] = None
    Q_GRID: Optional[str] = None
    P_MAX: int = Field(default=4, ge=1, le=MAX_DEGREE)
    S_LOWER: float = Field(default=1.0, gt=0)
    S_UPPER: Optional[float] = Field(default=None, gt=0)
    THEOREM: Optional[int] = Field(default=None, ge=1, le=2)
    BETA: float = Field(default=0.5, ge=0)
    FULLY_UTILIZED: bool = True
    RESTARTS: int = Field(default=settings.RESTARTS, ge=0)
    SEED: int = settings.SEED
    WORKERS: int = Field(default=settings.WORKERS, ge=1)
    COEF_POINTS: int = Field(default=settings.COEF_POINTS, ge=2)
    COEF_MAX: float = Field(default=settings.COEF_MAX, gt=0)
    MASS_SPLITS: int = Field(default=settings.MASS_SPLITS, ge=1)
    OUT: Optional[str] = None

    model_config = SettingsConfigDict(extra="ignore", case_sensitive=False)

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: Type[BaseSettings],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> Tuple[PydanticBaseSettingsSource, ...]:
        # flags first, then the experiment file; process environment is not consulted
        return init_settings, dotenv_settings

    @field_validator("BETA_GRID", "Q_GRID")
    @classmethod
    def _check_grid(cls, v: Optional[str]) -> Optional[str]:
        return _grid_or_none(v)

    @model_validator(mode="after")
    def _check_bounds(self):
        if self.S_UPPER is not None and self.S_UPPER < self.S_LOWER:
            raise ValueError(f"sensitivity bounds must satisfy sL <= sU, got ({self.S_LOWER:g}, {self.S_UPPER:g})")
        if self.Q_GRID is not None:
            q = GridSpec.parse(self.Q_GRID)
            if q.start <= 0 or q.stop > 1:
                raise ValueError(f"q grid must lie in (0, 1], got {self.Q_GRID}")
        return self

    @classmethod
    def load(cls, path: Optional[str] = None, **overrides) -> "ExperimentConfig":
        """Read `path` (if any); keyword overrides that are not None win."""
        kwargs = {k: v for k, v in overrides.items() if v is not None}
        if path is not None and not Path(path).is_file():
            raise InstanceParseError(
                f"{path}: experiment file not found",
                diagnostics=[{"type": "missing_file", "loc": ["file"], "msg": "not found", "input": path, "ctx": None}],
            )
        try:
            return cls(_env_file=path, **kwargs)
        except ValidationError as exc:
            raise instance_parse_error(exc, source=str(path or "flags")) from exc

    @property
    def instance_paths(self) -> List[str]:
        return [p.strip() for p in self.INSTANCES.split(",") if p.strip()]

    def beta_values(self, default: str) -> List[float]:
        return GridSpec.parse(self.BETA_GRID or default).values()

    def q_values(self, default: str) -> List[float]:
        return GridSpec.parse(self.Q_GRID or default).values()

# tollsub/core/config.py
from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    # App
    PROJECT_NAME: str = "TollSub"
    LOG_LEVEL: str = "INFO"
    SHOW_PROGRESS: bool = False

    # === Tolerances ===
    # relative VI gap accepted as an equilibrium certificate
    EPS_EQ: float = Field(default=1e-8, gt=0)
    # feasibility tolerance on commodity / class masses
    EPS_FEAS: float = Field(default=1e-9, gt=0)
    # two class costs closer than this are a tie
    TIE_TOL: float = Field(default=1e-10, gt=0)

    # === Solvers ===
    MAX_ITERS: int = Field(default=100_000, ge=1)
    HETERO_MAX_ITERS: int = Field(default=20_000, ge=1)
    DAMPING: float = Field(default=0.5, gt=0, le=1)
    MIN_DAMPING: float = Field(default=1e-3, gt=0, le=1)
    MAX_PATHS: int = Field(default=10_000, ge=1)
    # sampling grid for monotonicity / sign / bound checks on [0, 1]
    GRID_POINTS: int = Field(default=1001, ge=2)

    # === Experiments ===
    RESTARTS: int = Field(default=10, ge=0)
    SEED: int = 0
    WORKERS: int = Field(default=1, ge=1)
    COEF_POINTS: int = Field(default=21, ge=2)
    COEF_MAX: float = Field(default=2.0, gt=0)
    MASS_SPLITS: int = Field(default=11, ge=1)

    model_config = SettingsConfigDict(env_prefix="TOLLSUB_", env_file=".env", extra="ignore")


settings = Settings()

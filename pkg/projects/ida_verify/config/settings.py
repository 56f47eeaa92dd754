from pathlib import Path
from pydantic_settings import BaseSettings, SettingsConfigDict
from functools import lru_cache

# Get root project directory
ROOT_DIR = Path(__file__).parent.parent.parent.parent
PROJECT_DIR = ROOT_DIR / "projects/ida_verify"
ENV_FILE = ROOT_DIR / ".env"


class Settings(BaseSettings):
    # Output
    OUT: Path = Path("ida_verify_out")

    # Reproducibility
    SEED: int = 0
    VALIDATION_SAMPLES: int = 200
    SWEEP_SAMPLES: int = 1000
    BOUND_SAMPLES: int = 10_000

    # Finite differences
    FD_STEP: float = 1e-6
    FD_ORDER: int = 2
    HESSIAN_STEP: float = 1e-4

    # Matching tolerances
    FEASIBILITY_TOL: float = 1e-6
    WARNING_TOL: float = 1e-3
    RESIDUAL_TOL: float = 1e-4

    # Simulation
    DT: float = 1e-3
    HORIZON: float = 10.0
    DIVERGENCE_LIMIT: float = 1e6

    # Logging
    LOG_LEVEL: str = "INFO"
    SHOW_PROGRESS: bool = False

    model_config = SettingsConfigDict(
        env_file=ENV_FILE,
        env_file_encoding="utf-8",
        extra="ignore",
        env_prefix="IDA_VERIFY_",
    )


@lru_cache()
def get_settings() -> Settings:
    """Get cached settings instance."""
    return Settings()

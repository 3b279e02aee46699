from pydantic_settings import BaseSettings, SettingsConfigDict
from typing import Optional
import os
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()


class Settings(BaseSettings):
    # Project Settings
    PROJECT_NAME: str = "memory-heat"
    VERSION: str = "0.3.0"

    # Output Settings (the only value read from the environment)
    OUTPUT_DIR: str = os.getenv("OUTPUT_DIR", "output")

    model_config = SettingsConfigDict(
        env_file=".env", case_sensitive=True, extra="ignore"
    )


settings = Settings()


# Discretization defaults
DEFAULT_N_MODES: int = 64
DEFAULT_N_NODES: int = 256
DEFAULT_DT: float = 1e-3
DEFAULT_TAIL_TOL: float = 1e-8
DEFAULT_FIRST_SPACING: float = 1e-3
MAX_GRID_RATIO: float = 1.25
DEFAULT_QUAD_TOL: float = 1e-3
MIN_GRID_NODES: int = 8

# Stepping guards
BLOWUP_THRESHOLD: float = 1e8

# Validation tolerances
CLOSED_FORM_TOL: float = 1e-10
TABULATED_SLACK: float = 1e-6
ROUGH_HISTORY_THRESHOLD: float = 1e6

# Estimation
DEFAULT_TAIL_SAMPLES: int = 64
MIN_BATCHES: int = 20
STATIONARITY_Z: float = 4.0


def resolve_output_dir(override: Optional[str] = None) -> str:
    """
    Output directory: CLI flag first, then OUTPUT_DIR
    """
    return override or settings.OUTPUT_DIR

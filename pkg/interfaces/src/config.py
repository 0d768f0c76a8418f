"""Configuration settings for the Gibbs concentration lab."""

import json
import logging
import math
import os
import sys
from functools import lru_cache
from pathlib import Path
from typing import List, Literal, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

# Load environment variables
load_dotenv()

# Base directory (project root) - go up two levels from src/config.py
BASE_DIR = Path(__file__).parent.parent.parent


class LabConfig(BaseSettings):
    """Runtime settings, overridable through ``LAB_*`` environment variables."""

    model_config = SettingsConfigDict(env_prefix="LAB_", extra="ignore")

    base_dir: Path = BASE_DIR
    data_dir: Path = BASE_DIR / "data"
    logs_dir: Path = BASE_DIR / "logs"
    output_dir: Path = BASE_DIR / "outputs"
    defaults_path: Path = BASE_DIR / "data" / "defaults.json"

    # Parallelism
    threads: int = Field(default_factory=lambda: os.cpu_count() or 1, ge=1)

    # Exact-mode caps
    enumeration_cap: int = Field(default=2**26, ge=1)
    neighborhood_cap: int = Field(default=2**26, ge=1)
    blowup_cap: int = Field(default=2**22, ge=1)
    blowup_sampled_set_cap: int = Field(default=2**16, ge=1)
    dense_table_cap: int = Field(default=2**20, ge=1)
    local_function_max_sites: int = Field(default=20, ge=1)
    chunk_size: int = Field(default=2**16, ge=1)

    # Sampling budget: sites * sweeps * chains for one run
    chain_budget: float = Field(default=2e11, gt=0)

    log_level: str = "INFO"

    def ensure_dirs(self) -> "LabConfig":
        """Create the output and log directories."""
        self.logs_dir.mkdir(parents=True, exist_ok=True)
        self.output_dir.mkdir(parents=True, exist_ok=True)
        return self


class Defaults(BaseModel):
    """Versioned experiment defaults.

    The bound constants are typed as literals so that an edited
    defaults file fails validation instead of silently changing a bound.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    version: int
    deviation_constant: Literal[36]
    frequency_volume_ratio: Literal[1.25]
    frequency_rho_numerator: Literal[2]
    frequency_rho_denominator: Literal[5]
    event_margin_divisor: Literal[3]
    variance_ceiling_factor: Literal[8]
    entropy_slack: float
    lambda_grid: List[float]
    lambda_oscillation_cap: float = 20.0
    sigma_threshold: float = 3.0
    burnin_high_temperature: int = 1000
    burnin_low_temperature: int = 10000
    exact_tolerance: float = 1e-12
    dlr_tolerance: float = 1e-10

    @field_validator("entropy_slack")
    @classmethod
    def _entropy_slack_is_two_over_e(cls, value: float) -> float:
        if not math.isclose(value, 2.0 / math.e, rel_tol=0.0, abs_tol=1e-15):
            raise ValueError("entropy_slack must equal 2/e")
        return value

    @field_validator("lambda_grid")
    @classmethod
    def _positive_grid(cls, value: List[float]) -> List[float]:
        if not value or any(v <= 0 for v in value):
            raise ValueError("lambda_grid must be a non-empty list of positive magnitudes")
        return sorted(value)


@lru_cache(maxsize=1)
def get_config() -> LabConfig:
    """Process-wide settings (call ``get_config.cache_clear()`` after changing LAB_* variables)."""
    return LabConfig()


@lru_cache(maxsize=None)
def load_defaults(path: Optional[str] = None) -> Defaults:
    """Load and validate the defaults file.

    Args:
        path: Optional path to a defaults JSON file

    Returns:
        Validated Defaults instance
    """
    defaults_path = Path(path) if path else LabConfig().defaults_path
    with open(defaults_path, "r", encoding="utf-8") as f:
        return Defaults.model_validate(json.load(f))


class InterceptHandler(logging.Handler):
    """Forward standard-library log records to loguru."""

    def emit(self, record: logging.LogRecord) -> None:
        from loguru import logger

        try:
            level = logger.level(record.levelname).name
        except ValueError:
            level = record.levelno

        frame, depth = logging.currentframe(), 2
        while frame and frame.f_code.co_filename == logging.__file__:
            frame = frame.f_back
            depth += 1

        logger.opt(depth=depth, exception=record.exc_info).log(level, record.getMessage())


def setup_logging(config: Optional[LabConfig] = None) -> None:
    """Route all ``logging`` output through loguru (stderr plus a log file)."""
    from loguru import logger

    config = config or LabConfig()
    config.ensure_dirs()

    logger.remove()
    logger.add(sys.stderr, level=config.log_level)
    logger.add(config.logs_dir / "lab.log", level="DEBUG", rotation="10 MB", encoding="utf-8")
    logging.basicConfig(handlers=[InterceptHandler()], level=0, force=True)

import logging
import os
from contextvars import ContextVar
from functools import lru_cache
from typing import Literal

from dotenv import load_dotenv
from pydantic import BaseModel, Field

logger = logging.getLogger(__name__)

load_dotenv()

EigenBackend = Literal["jacobi", "lapack"]

SEED = int(os.getenv("ENTMEAS_SEED", "1"))
SIGNIFICANCE = float(os.getenv("ENTMEAS_SIGNIFICANCE", "3.0"))
ENUMERATION_BUDGET = int(float(os.getenv("ENTMEAS_ENUMERATION_BUDGET", "1e8")))
WORKERS = int(os.getenv("ENTMEAS_WORKERS", "1"))
EIGEN_BACKEND = os.getenv("ENTMEAS_EIGEN_BACKEND", "jacobi")
SEESAW_BACKEND = os.getenv("ENTMEAS_SEESAW_BACKEND", "lapack")
LOG_LEVEL = os.getenv("ENTMEAS_LOG_LEVEL", "WARNING")


class Settings(BaseModel):
    """Process-wide defaults.

    Values come from ``ENTMEAS_*`` environment variables (a ``.env`` file is
    honoured). Command-line flags take precedence over these.
    """

    seed: int = Field(default=1, description="Default RNG seed for sampling and optimizer restarts")
    significance: float = Field(default=3.0, gt=0, description="Verdict threshold in standard errors")
    enumeration_budget: int = Field(default=10**8, ge=1, description="Maximum classical strategies to enumerate")
    workers: int = Field(default=1, ge=1, description="Process workers for restarts and enumeration")
    eigen_backend: EigenBackend = Field(default="jacobi", description="Eigensolver behind linalg.eig_hermitian")
    seesaw_backend: EigenBackend = Field(default="lapack", description="Eigensolver used inside optimizer loops")
    log_level: str = Field(default="WARNING", description="Root log level for the CLI")


settings_override: ContextVar[Settings | None] = ContextVar("settings_override", default=None)


@lru_cache(maxsize=1)
def _get_cached_settings(
    seed: int,
    significance: float,
    enumeration_budget: int,
    workers: int,
    eigen_backend: str,
    seesaw_backend: str,
    log_level: str,
) -> Settings:
    """Build the settings object once per distinct environment."""
    return Settings.model_validate(
        {
            "seed": seed,
            "significance": significance,
            "enumeration_budget": enumeration_budget,
            "workers": workers,
            "eigen_backend": eigen_backend,
            "seesaw_backend": seesaw_backend,
            "log_level": log_level,
        }
    )


def get_settings() -> Settings:
    """Get the active settings.

    A value placed in ``settings_override`` wins over the environment, which
    lets tests and embedding code pin configuration without touching
    ``os.environ``.

    Returns:
        Active Settings instance
    """
    override = settings_override.get(None)
    if override is not None:
        return override

    return _get_cached_settings(
        SEED, SIGNIFICANCE, ENUMERATION_BUDGET, WORKERS, EIGEN_BACKEND, SEESAW_BACKEND, LOG_LEVEL
    )

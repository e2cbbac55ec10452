"""
Runtime configuration for the unfolding library.

Values come from defaults, then RFDE_-prefixed environment variables (a .env
file is honoured), then problem-file tolerances, then command-line flags.
"""

import logging
import sys
from typing import Any, Dict, Optional

import structlog
from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class UnfoldSettings(BaseSettings):
    """Numerical tolerances and limits shared by every module."""

    model_config = SettingsConfigDict(env_prefix="RFDE_", env_file=".env", extra="ignore")

    rank_tol: float = Field(1e-8, gt=0, description="Relative singular-value threshold for rank decisions")
    root_tol: float = Field(1e-8, gt=0, description="Relative σ_min(Δ(λ)) below which λ counts as a root")
    pairing_tol: float = Field(1e-9, gt=0, description="Allowed max-entry deviation of (Ψ,Φ) from I")
    realness_tol: float = Field(1e-9, gt=0, description="Imaginary residue truncated on real blocks")
    residual_tol: float = Field(1e-9, gt=0, description="Residual bound for coefficient solves")
    grid_size: int = Field(64, ge=2, description="Uniform delay grid size on [-tau, 0]")
    max_chain_length: int = Field(32, ge=1, description="Upper bound on Jordan chain lengths")
    newton_max_iter: int = Field(50, ge=1, description="Newton iteration cap")
    ambiguity_factor: float = Field(100.0, gt=1, description="Width of the ambiguous band around rank_tol")
    log_level: str = Field("INFO", description="structlog filtering level")

    def merged(self, overrides: Optional[Dict[str, Any]] = None) -> "UnfoldSettings":
        """
        Return a copy with the non-None overrides applied.

        Args:
            overrides: Field values taking precedence over the current ones

        Returns:
            New settings instance
        """
        updates = {key: value for key, value in (overrides or {}).items() if value is not None}
        if not updates:
            return self
        return self.model_copy(update=updates)


def configure_logging(level: str = "INFO") -> None:
    """Route structlog output to stderr with the given minimum level."""
    numeric_level = logging.getLevelName(level.upper())
    if not isinstance(numeric_level, int):
        numeric_level = logging.INFO

    structlog.configure(
        processors=[
            structlog.processors.add_log_level,
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.dev.ConsoleRenderer(colors=False),
        ],
        wrapper_class=structlog.make_filtering_bound_logger(numeric_level),
        logger_factory=structlog.PrintLoggerFactory(file=sys.stderr),
        cache_logger_on_first_use=False,
    )

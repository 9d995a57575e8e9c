"""
Environment Configuration
"""

import os
import json
import logging
from typing import Optional, Dict, Any

from dotenv import load_dotenv
from pydantic import BaseModel, Field, ValidationError, field_validator

from shared.models.errors import ConfigurationError

logger = logging.getLogger(__name__)


class Settings(BaseModel):
    """Runtime settings read from the environment (and an optional .env file)"""

    log_level: str = "WARNING"
    solver_tol: float = Field(default=1e-8, gt=0)
    solver_max_iter: int = Field(default=10000, gt=0)
    hull_tol: float = Field(default=1e-7, gt=0)
    n_jobs: int = 1
    grid_step: float = Field(default=0.1, gt=0, le=1)

    @field_validator("log_level")
    @classmethod
    def _known_level(cls, value: str) -> str:
        value = value.upper()
        if value not in {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}:
            raise ValueError(f"unknown log level {value}")
        return value

    @field_validator("n_jobs")
    @classmethod
    def _nonzero_jobs(cls, value: int) -> int:
        if value == 0:
            raise ValueError("n_jobs must be nonzero (use -1 for all cores)")
        return value


ENV_KEYS = {
    "log_level": "LOG_LEVEL",
    "solver_tol": "SYNTH_SOLVER_TOL",
    "solver_max_iter": "SYNTH_SOLVER_MAX_ITER",
    "hull_tol": "SYNTH_HULL_TOL",
    "n_jobs": "SYNTH_N_JOBS",
    "grid_step": "SYNTH_GRID_STEP",
}


def load_settings(dotenv_path: Optional[str] = None) -> Settings:
    """
    Build Settings from environment variables, loading .env first
    """
    load_dotenv(dotenv_path)

    raw = {
        field: os.getenv(env_key)
        for field, env_key in ENV_KEYS.items()
        if os.getenv(env_key) is not None
    }
    try:
        settings = Settings(**raw)
    except ValidationError as e:
        raise ConfigurationError(f"invalid environment configuration: {e.errors()[0]['msg']}") from e

    logger.debug(f"Settings loaded: {settings.model_dump()}")
    return settings


class CommandConfig(BaseModel):
    """Per-command defaults read from a --config JSON file"""

    estimate: Dict[str, Any] = Field(default_factory=dict)
    placebo: Dict[str, Any] = Field(default_factory=dict)
    hull: Dict[str, Any] = Field(default_factory=dict)
    simulate: Dict[str, Any] = Field(default_factory=dict)
    robust: Dict[str, Any] = Field(default_factory=dict)

    model_config = {"extra": "forbid"}

    def default_map(self) -> Dict[str, Dict[str, Any]]:
        """Convert to click's default_map (option names use underscores)"""
        return {
            command: {key.replace("-", "_"): value for key, value in section.items()}
            for command, section in self.model_dump().items()
            if section
        }


def load_command_config(path: str) -> CommandConfig:
    """
    Parse a --config JSON file
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"config file {path} is not valid JSON: {e.msg}") from e

    try:
        return CommandConfig(**data)
    except (ValidationError, TypeError) as e:
        raise ConfigurationError(f"config file {path} has an invalid layout: {e}") from e

#!/usr/bin/env python3
"""
Settings - Environment configuration and logging setup
Reads optional .env values for the TAC optimizer and configures logging
"""

import logging
import os
from dataclasses import dataclass
from pathlib import Path

from dotenv import load_dotenv

load_dotenv()

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


@dataclass(frozen=True)
class Settings:
    """Runtime settings resolved from the environment"""
    log_level: str = "INFO"
    output_dir: Path = Path("./runs")
    max_workers: int = 1
    max_evaluations: int = 500
    mesh_tolerance: float = 1e-4


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return int(raw)
    except ValueError:
        logging.getLogger(__name__).warning(f"⚠️ {name}={raw!r} is not an integer, using {default}")
        return default


def _env_float(name: str, default: float) -> float:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return float(raw)
    except ValueError:
        logging.getLogger(__name__).warning(f"⚠️ {name}={raw!r} is not a number, using {default}")
        return default


def load_settings() -> Settings:
    """Build Settings from TAC_* environment variables"""
    return Settings(
        log_level=os.getenv("TAC_LOG_LEVEL", "INFO").upper(),
        output_dir=Path(os.getenv("TAC_OUTPUT_DIR", "./runs")),
        max_workers=max(1, _env_int("TAC_MAX_WORKERS", 1)),
        max_evaluations=max(1, _env_int("TAC_MAX_EVALUATIONS", 500)),
        mesh_tolerance=_env_float("TAC_MESH_TOLERANCE", 1e-4),
    )


def configure_logging(level: str = "INFO"):
    """Configure root logging for development and production"""
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format=LOG_FORMAT
    )

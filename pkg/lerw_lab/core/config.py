"""
Configuration - Environment-backed defaults and tolerances.

Values come from built-in defaults, then the environment (a ``.env`` file in
the working directory is loaded first), then an optional JSON config file, and
finally explicit command-line flags.
"""

import json
import os
from pathlib import Path
from typing import Any, Dict, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, Field

load_dotenv()


class LabSettings(BaseModel):
    """Process-wide defaults shared by the library and the CLI."""

    seed: int = 0
    workers: int = Field(default=1, ge=1)
    chunk_size: int = Field(default=256, ge=1)
    output_dir: Path = Path("lab_output")
    log_level: str = "WARNING"

    # Tolerances
    lattice_tolerance: float = 1e-9
    trace_tolerance: float = 1e-6
    blowup_tolerance: float = 1e-6
    trace_offset: float = 1e-3
    inverse_agreement: float = 1e-4
    step_cap: int = 10 ** 9

    @classmethod
    def from_env(cls) -> "LabSettings":
        """
        Build settings from ``LERW_LAB_*`` environment variables.

        Returns:
            Settings with environment overrides applied
        """
        overrides: Dict[str, Any] = {}
        env_map = {
            'seed': 'LERW_LAB_SEED',
            'workers': 'LERW_LAB_WORKERS',
            'chunk_size': 'LERW_LAB_CHUNK_SIZE',
            'output_dir': 'LERW_LAB_OUTPUT_DIR',
            'log_level': 'LERW_LAB_LOG_LEVEL',
        }
        for field, var in env_map.items():
            value = os.getenv(var)
            if value:
                overrides[field] = value
        return cls(**overrides)


def load_config_file(path: Optional[Path]) -> Dict[str, Any]:
    """
    Read a JSON config file whose keys mirror the command-line flags.

    Args:
        path: Path to the JSON file, or None

    Returns:
        Mapping of flag names (dashes replaced by underscores) to values
    """
    if path is None:
        return {}
    if not path.exists():
        raise FileNotFoundError(f"Config file not found: {path}")
    with open(path, 'r', encoding='utf-8') as f:
        data = json.load(f)
    if not isinstance(data, dict):
        raise ValueError(f"Config file must hold a JSON object: {path}")
    return {key.replace('-', '_'): value for key, value in data.items()}


_settings: Optional[LabSettings] = None


def get_settings() -> LabSettings:
    """Return the cached process settings."""
    global _settings
    if _settings is None:
        _settings = LabSettings.from_env()
    return _settings

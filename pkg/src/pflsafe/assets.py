"""Paths to the data files shipped with the package."""
from __future__ import annotations

from pathlib import Path

_DATA = Path(__file__).parent / "data"


def body_table_path() -> Path:
    """Reference body-region limit table (CSV)."""
    return _DATA / "body_regions.csv"


def robot_model_path() -> Path:
    """Reference 7-DoF arm description (YAML)."""
    return _DATA / "panda.yaml"

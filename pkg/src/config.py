"""
Configuration management for the random field Ising laboratory.
"""
import os
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv
from pydantic import BaseModel, Field

# Load environment variables
load_dotenv()

# Critical inverse temperature log(1 + sqrt(2)) / 2 to 17 significant digits
BETA_C = 0.44068679350977151


class Config(BaseModel):
    """System configuration."""

    # Paths
    PROJECT_ROOT: Path = Field(default_factory=lambda: Path(__file__).parent.parent)
    MANIFEST_DIR: Path = Field(
        default_factory=lambda: Path(os.getenv("RFIM_MANIFEST_DIR", str(Path(__file__).parent.parent / "manifests")))
    )
    OUTPUT_DIR: Path = Field(
        default_factory=lambda: Path(os.getenv("RFIM_OUTPUT_DIR", "./runs"))
    )
    LOGS_DIR: Path = Field(
        default_factory=lambda: Path(os.getenv("RFIM_LOGS_DIR", str(Path(__file__).parent.parent / "logs")))
    )

    # Reproducibility
    MASTER_SEED: int = Field(default_factory=lambda: int(os.getenv("RFIM_MASTER_SEED", "20240607")))
    MAX_WORKERS: int = Field(default_factory=lambda: int(os.getenv("RFIM_MAX_WORKERS", "4")))

    # Exact backends
    ENUMERATION_CAP: int = Field(default_factory=lambda: int(os.getenv("RFIM_ENUMERATION_CAP", "26")))
    TRANSFER_MAX_WIDTH: int = Field(default_factory=lambda: int(os.getenv("RFIM_TRANSFER_MAX_WIDTH", "20")))
    EXPANSION_MAX_SITES: int = Field(default_factory=lambda: int(os.getenv("RFIM_EXPANSION_MAX_SITES", "16")))
    ENUMERATION_CHUNK: int = 1 << 16

    # Chaos expansions
    CHAOS_DEGREE: int = Field(default_factory=lambda: int(os.getenv("RFIM_CHAOS_DEGREE", "4")))

    # Monte Carlo
    BURN_IN_SWEEPS: int = Field(default_factory=lambda: int(os.getenv("RFIM_BURN_IN_SWEEPS", "500")))
    EQUILIBRATION_FACTOR: float = Field(
        default_factory=lambda: float(os.getenv("RFIM_EQUILIBRATION_FACTOR", "20"))
    )
    AUTOCORR_WINDOW_C: float = 6.0

    # Wavelets and Besov norms
    WAVELET_ORDER: int = Field(default_factory=lambda: int(os.getenv("RFIM_WAVELET_ORDER", "3")))
    CASCADE_DEPTH: int = Field(default_factory=lambda: int(os.getenv("RFIM_CASCADE_DEPTH", "12")))
    SUP_POINTS_PER_SUPPORT: int = Field(
        default_factory=lambda: int(os.getenv("RFIM_SUP_POINTS_PER_SUPPORT", "4"))
    )
    BUMP_QUADRATURE_NODES: int = 24

    # Statistics
    BOOTSTRAP_RESAMPLES: int = Field(
        default_factory=lambda: int(os.getenv("RFIM_BOOTSTRAP_RESAMPLES", "400"))
    )
    CONFIDENCE_LEVEL: float = 0.95

    # Singularity pipeline
    EPSILON_PERCENTILE: float = 5.0
    TOP_DECILE_MIN_OCCUPANCY: int = 20
    # Fixed tilt strength S; unset means the log log(1/a) + log N schedule
    TILT_STRENGTH: Optional[float] = Field(
        default_factory=lambda: float(os.environ["RFIM_TILT_STRENGTH"]) if os.getenv("RFIM_TILT_STRENGTH") else None
    )

    def __init__(self, **data):
        super().__init__(**data)
        # Create directories if they don't exist
        self.OUTPUT_DIR.mkdir(parents=True, exist_ok=True)
        self.LOGS_DIR.mkdir(parents=True, exist_ok=True)

# Global config instance
config = Config()

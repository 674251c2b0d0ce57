"""
Experiment manifests: validated descriptions of one experiment grid.
"""
import hashlib
import json
import logging
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, Field, field_validator, model_validator

from ..config import config
from ..disorder.laws import DisorderLaw
from ..disorder.profiles import Profile, ProfileSpec, make_profile
from ..lattice.domain import DomainSpec, UNIT_SQUARE

logger = logging.getLogger(__name__)

MANIFEST_VERSION = 1


class ExperimentKind(str, Enum):
    SCALING = "scaling"
    CHAOS_IDENTITY = "chaos-identity"
    LINDEBERG = "lindeberg"
    BESOV = "besov"
    SINGULARITY = "singularity"
    MOMENTS = "moments"
    TANH_TABLE = "tanh-table"


class DomainModel(BaseModel):
    """Polygon vertices of the domain (the unit square by default)."""
    shape: List[Tuple[float, float]] = Field(default_factory=lambda: [tuple(v) for v in UNIT_SQUARE])

    def at_mesh(self, mesh: float) -> DomainSpec:
        return DomainSpec(mesh=mesh, shape=tuple(tuple(v) for v in self.shape))


class ExperimentManifest(BaseModel):
    """
    One experiment over a grid of meshes and block/resolution/degree parameters.

    Presets follow the standing assumptions: lambda is C¹ with a positive
    infimum unless the manifest is a lambda = 0 control, h is C¹.
    """
    version: int = MANIFEST_VERSION
    name: str
    kind: ExperimentKind
    domain: DomainModel = Field(default_factory=DomainModel)
    lam: ProfileSpec = Field(default_factory=ProfileSpec)
    h: ProfileSpec = Field(default_factory=lambda: ProfileSpec(value=0.0))
    phi: Optional[ProfileSpec] = None
    law: DisorderLaw = DisorderLaw.GAUSSIAN
    meshes: List[float]
    Ns: List[int] = Field(default_factory=lambda: [1])
    ms: List[int] = Field(default_factory=lambda: [0])
    ls: List[int] = Field(default_factory=lambda: [config.CHAOS_DEGREE])
    replicas: int = Field(default=1000, gt=0)
    sweeps: int = Field(default=2000, gt=0)
    seed: int = Field(default_factory=lambda: config.MASTER_SEED)
    output_dir: Optional[Path] = None
    options: Dict[str, Any] = Field(default_factory=dict)

    @field_validator('meshes')
    @classmethod
    def _meshes(cls, value: List[float]) -> List[float]:
        if not value:
            raise ValueError("mesh list must not be empty")
        if any(not 0.0 < a <= 1.0 for a in value):
            raise ValueError("meshes must lie in (0, 1]")
        return value

    @field_validator('Ns')
    @classmethod
    def _blocks(cls, value: List[int]) -> List[int]:
        if not value:
            raise ValueError("N grid must not be empty")
        if any(n < 1 or n & (n - 1) for n in value):
            raise ValueError("every N must be a power of two")
        return value

    @field_validator('ms', 'ls')
    @classmethod
    def _non_negative(cls, value: List[int]) -> List[int]:
        if not value:
            raise ValueError("grid must not be empty")
        if any(v < 0 for v in value):
            raise ValueError("grid entries must be non-negative")
        return value

    @model_validator(mode='after')
    def _version(self) -> 'ExperimentManifest':
        if self.version > MANIFEST_VERSION:
            raise ValueError(f"manifest version {self.version} is newer than {MANIFEST_VERSION}")
        return self

    def profiles(self) -> Dict[str, Optional[Profile]]:
        return {
            'lam': make_profile(self.lam),
            'h': make_profile(self.h),
            'phi': make_profile(self.phi) if self.phi is not None else None,
        }

    def option(self, key: str, default: Any = None) -> Any:
        return self.options.get(key, default)

    def canonical(self) -> Dict[str, Any]:
        """Fields that determine results (the output directory excluded)."""
        return self.model_dump(mode='json', exclude={'output_dir'})

    def content_hash(self) -> str:
        payload = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    def output_root(self, override: Optional[Path] = None) -> Path:
        root = override or self.output_dir or config.OUTPUT_DIR
        return Path(root) / self.name


def load_manifest(path: Path) -> ExperimentManifest:
    """
    Read and validate a JSON manifest.

    Raises:
        pydantic.ValidationError: with field-level messages
    """
    with open(path, 'r', encoding='utf-8') as f:
        data = json.load(f)
    manifest = ExperimentManifest.model_validate(data)
    logger.info(f"Loaded manifest {manifest.name} ({manifest.kind.value}) from {path}")
    return manifest

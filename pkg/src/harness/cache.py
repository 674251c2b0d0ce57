"""
Content-addressed cache of completed grid cells.
"""
import hashlib
import json
import logging
from dataclasses import asdict, dataclass
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional

from ..config import config
from ..persistence import dumps_json

logger = logging.getLogger(__name__)


def code_version(root: Optional[Path] = None) -> str:
    """SHA-256 over the sorted paths and contents of every source file of the package."""
    root = root or config.PROJECT_ROOT / "src"
    digest = hashlib.sha256()
    for path in sorted(root.rglob("*.py")):
        digest.update(str(path.relative_to(root)).encode("utf-8"))
        digest.update(b"\0")
        digest.update(path.read_bytes())
    return digest.hexdigest()


def cell_key(manifest_hash: str, cell: Dict[str, Any], version: str) -> str:
    payload = json.dumps({'manifest': manifest_hash, 'cell': cell, 'code': version},
                         sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass
class CellResult:
    """Outcome of one grid cell."""
    key: str
    cell: Dict[str, Any]
    status: str
    rows: List[Dict[str, Any]]
    summary: Dict[str, Any]
    error: Optional[str] = None
    wall_clock: float = 0.0
    completed_at: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'CellResult':
        return cls(**data)


class ResultCache:
    """
    One JSON file per completed cell under <root>/cells/<key>.json.

    Failed cells are never served from the cache, so a rerun retries them.
    Files are written to a temporary name and renamed, so an interrupted
    run leaves no partial cell behind.
    """

    def __init__(self, root: Path):
        """
        Initialize the cache.

        Args:
            root: Run directory
        """
        self.directory = root / "cells"
        self.directory.mkdir(parents=True, exist_ok=True)

    def _path(self, key: str) -> Path:
        return self.directory / f"{key}.json"

    def get(self, key: str) -> Optional[CellResult]:
        """
        Cached result for a cell key.

        Returns:
            The result if present and successful, None otherwise
        """
        path = self._path(key)
        if not path.exists():
            return None
        try:
            with open(path, 'r', encoding='utf-8') as f:
                result = CellResult.from_dict(json.load(f))
        except Exception as e:
            logger.error(f"Failed to load cached cell {key[:12]}: {e}")
            return None
        if result.status != "ok":
            logger.warning(f"Cached cell {key[:12]} failed before, will recompute")
            return None
        return result

    def has(self, key: str) -> bool:
        return self.get(key) is not None

    def set(self, result: CellResult):
        """Persist a cell result atomically."""
        result.completed_at = result.completed_at or datetime.now().isoformat()
        path = self._path(result.key)
        tmp = path.with_suffix(".tmp")
        with open(tmp, 'w', encoding='utf-8') as f:
            f.write(dumps_json(result.to_dict()))
        tmp.replace(path)
        logger.debug(f"Cached cell {result.key[:12]} ({result.status})")

    def clear(self):
        """Remove every cached cell."""
        for path in self.directory.glob("*.json"):
            path.unlink()
        logger.info("Cell cache cleared")

    def get_stats(self) -> Dict[str, Any]:
        files = list(self.directory.glob("*.json"))
        return {'total_cached': len(files), 'directory': str(self.directory)}

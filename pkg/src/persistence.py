"""
JSON, CSV and binary writers shared by all modules.
"""
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)


class NumpyEncoder(json.JSONEncoder):
    """Custom JSON encoder for numpy types."""
    def default(self, obj):
        if isinstance(obj, (np.integer, np.int32, np.int64)):
            return int(obj)
        elif isinstance(obj, (np.floating, np.float32, np.float64)):
            return float(obj)
        elif isinstance(obj, (np.complexfloating, complex)):
            return {"re": float(np.real(obj)), "im": float(np.imag(obj))}
        elif isinstance(obj, np.bool_):
            return bool(obj)
        elif isinstance(obj, np.ndarray):
            return obj.tolist()
        elif isinstance(obj, Path):
            return str(obj)
        return super().default(obj)


def dumps_json(data: Any) -> str:
    """Serialize to the canonical JSON text used for every output."""
    return json.dumps(data, indent=2, ensure_ascii=False, sort_keys=True, cls=NumpyEncoder)


def save_json(data: Any, path: Path):
    """
    Save a JSON document.

    Args:
        data: JSON-serializable structure (numpy types allowed)
        path: Output file
    """
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        f.write(dumps_json(data))
    logger.debug(f"Saved JSON to {path}")


def load_json(path: Path) -> Any:
    """Load a JSON document."""
    with open(path, 'r', encoding='utf-8') as f:
        return json.load(f)


def save_table(rows: Sequence[Dict[str, Any]], path: Path, columns: Optional[List[str]] = None) -> pd.DataFrame:
    """
    Save rows as a CSV table.

    Args:
        rows: Row dictionaries
        path: Output CSV file
        columns: Column order; also the header written for an empty table

    Returns:
        The DataFrame that was written
    """
    frame = pd.DataFrame(list(rows), columns=columns)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format="%.17g")
    logger.info(f"Saved {len(frame)} rows to {path}")
    return frame


def load_table(path: Path) -> pd.DataFrame:
    """Load a CSV table written by save_table."""
    return pd.read_csv(path)


def save_array(values: np.ndarray, path: Path, metadata: Dict[str, Any]):
    """
    Save a flat array as little-endian float64 with a JSON sidecar.

    Args:
        values: Array (flattened in row-major order)
        path: Output ``.bin`` file; the sidecar is ``path`` + ``.json``
        metadata: Sidecar content (seed, mesh, law...)
    """
    path.parent.mkdir(parents=True, exist_ok=True)
    np.ascontiguousarray(values, dtype='<f8').ravel().tofile(path)
    sidecar = dict(metadata)
    sidecar.update({"dtype": "<f8", "length": int(np.size(values))})
    save_json(sidecar, path.with_suffix(path.suffix + ".json"))


def load_array(path: Path) -> Tuple[np.ndarray, Dict[str, Any]]:
    """Load an array written by save_array together with its sidecar."""
    sidecar = load_json(path.with_suffix(path.suffix + ".json"))
    values = np.fromfile(path, dtype='<f8')
    return values, sidecar


def save_packed_spins(spins: np.ndarray, path: Path, metadata: Dict[str, Any]):
    """
    Save +-1 spin configurations as packed bits with a JSON sidecar.

    Args:
        spins: Array of shape (n_sites,) or (n_samples, n_sites)
        path: Output ``.bits`` file
        metadata: Sidecar content (a, seed, sweep index...)
    """
    spins = np.atleast_2d(spins)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.packbits(spins > 0, axis=1).tofile(path)
    sidecar = dict(metadata)
    sidecar.update({"n_samples": int(spins.shape[0]), "n_sites": int(spins.shape[1])})
    save_json(sidecar, path.with_suffix(path.suffix + ".json"))


def load_packed_spins(path: Path) -> Tuple[np.ndarray, Dict[str, Any]]:
    """Load spins written by save_packed_spins."""
    sidecar = load_json(path.with_suffix(path.suffix + ".json"))
    n_samples, n_sites = sidecar["n_samples"], sidecar["n_sites"]
    packed = np.fromfile(path, dtype=np.uint8).reshape(n_samples, -1)
    bits = np.unpackbits(packed, axis=1)[:, :n_sites]
    return (2 * bits.astype(np.int8) - 1), sidecar

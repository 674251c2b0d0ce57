"""
Resumable, content-addressed execution of an experiment manifest.
"""
import logging
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict, dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional

from tqdm import tqdm

from ..config import config
from ..persistence import load_json, save_json
from .cache import CellResult, ResultCache, cell_key, code_version
from .experiments import expand_cells, run_cell
from .manifest import ExperimentManifest

logger = logging.getLogger(__name__)

RECORD_FILE = "run_record.json"


@dataclass
class RunRecord:
    """Provenance of one run and the files it produced."""
    name: str
    kind: str
    manifest_hash: str
    code_version: str
    output_dir: str
    wall_clock: float
    started_at: str
    cell_keys: List[str]
    cells_computed: int
    cells_cached: int
    failures: List[Dict[str, Any]] = field(default_factory=list)
    result_files: Dict[str, str] = field(default_factory=dict)

    @property
    def root(self) -> Path:
        return Path(self.output_dir)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def save(self):
        save_json(self.to_dict(), self.root / RECORD_FILE)

    @classmethod
    def load(cls, root: Path) -> 'RunRecord':
        return cls(**load_json(Path(root) / RECORD_FILE))


def execute_cell(manifest_data: Dict[str, Any], cell: Dict[str, Any], key: str) -> CellResult:
    """
    Run one cell, capturing any failure in the result.

    Takes the manifest as plain data so it can cross a process boundary.
    """
    manifest = ExperimentManifest.model_validate(manifest_data)
    start = time.perf_counter()
    try:
        rows, summary = run_cell(manifest, cell)
        status, error = "ok", None
    except Exception as e:
        logger.error(f"Cell {cell} of {manifest.name} failed: {e}", exc_info=True)
        rows, summary = [], {}
        status, error = "failed", f"{type(e).__name__}: {e}"
    return CellResult(key=key, cell=cell, status=status, rows=rows, summary=summary, error=error,
                      wall_clock=time.perf_counter() - start)


def run_experiment(
    manifest: ExperimentManifest,
    workers: Optional[int] = None,
    out: Optional[Path] = None,
    show_progress: bool = True,
) -> RunRecord:
    """
    Execute every cell of a manifest, skipping cells already in the cache.

    Completed cells are persisted one file at a time as they finish, so an
    interrupted run resumes where it stopped. Failed cells are recorded and
    the run continues. Tables are written in cell order once all cells are
    done, which makes them identical across reruns.

    Args:
        manifest: Validated manifest
        workers: Worker processes (default MAX_WORKERS; 1 runs in-process)
        out: Output root overriding the manifest and RFIM_OUTPUT_DIR
        show_progress: Show a progress bar over pending cells

    Returns:
        RunRecord, also saved as run_record.json in the run directory
    """
    from .report import emit_report

    workers = workers or config.MAX_WORKERS
    root = manifest.output_root(out)
    root.mkdir(parents=True, exist_ok=True)
    cache = ResultCache(root)
    version = code_version()
    manifest_hash = manifest.content_hash()
    save_json(manifest.canonical(), root / "manifest.json")

    cells = expand_cells(manifest)
    keys = [cell_key(manifest_hash, cell, version) for cell in cells]
    pending = [(cell, key) for cell, key in zip(cells, keys) if not cache.has(key)]

    logger.info("=" * 80)
    logger.info(f"Run {manifest.name} ({manifest.kind.value}): {len(cells)} cells, "
                f"{len(cells) - len(pending)} cached, {len(pending)} to compute with {workers} worker(s)")
    logger.info("=" * 80)

    started = datetime.now().isoformat()
    start = time.perf_counter()
    data = manifest.model_dump(mode='json')
    failures = []

    def record(result: CellResult):
        cache.set(result)
        if result.status != "ok":
            failures.append({'cell': result.cell, 'key': result.key, 'error': result.error})

    if workers > 1 and len(pending) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            futures = [ex.submit(execute_cell, data, cell, key) for cell, key in pending]
            for fut in tqdm(as_completed(futures), total=len(futures), desc=manifest.name,
                            disable=not show_progress):
                record(fut.result())
    else:
        for cell, key in tqdm(pending, desc=manifest.name, disable=not show_progress):
            record(execute_cell(data, cell, key))

    run = RunRecord(
        name=manifest.name,
        kind=manifest.kind.value,
        manifest_hash=manifest_hash,
        code_version=version,
        output_dir=str(root),
        wall_clock=time.perf_counter() - start,
        started_at=started,
        cell_keys=keys,
        cells_computed=len(pending),
        cells_cached=len(cells) - len(pending),
        failures=failures,
    )
    run.result_files = emit_report(run)
    run.save()
    if failures:
        logger.warning(f"{len(failures)} of {len(cells)} cells failed; rerun to retry them")
    logger.info(f"Run {manifest.name} finished in {run.wall_clock:.1f}s, results in {root}")
    return run

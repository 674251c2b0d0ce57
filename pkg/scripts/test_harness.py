"""
Tests for manifests, the cell cache, resumable runs, reports and the command line.
"""
import json
import sys
import tempfile
from pathlib import Path

# Add parent directory to path
sys.path.append(str(Path(__file__).parent.parent))

from pydantic import ValidationError

from src.config import config
from src.harness.cache import CellResult, ResultCache, cell_key
from src.harness.cli import main as cli_main
from src.harness.experiments import KIND_TABLES, TABLE_COLUMNS, expand_cells
from src.harness.manifest import ExperimentKind, ExperimentManifest, load_manifest
from src.harness.report import build_tables, emit_report, evaluate_acceptance, write_tables
from src.harness.runner import RunRecord, run_experiment
from src.persistence import load_json, load_table

MANIFESTS = Path(__file__).parent.parent / "manifests"


def _small_identity_manifest(root: Path) -> ExperimentManifest:
    return ExperimentManifest(
        name="identity-small",
        kind=ExperimentKind.CHAOS_IDENTITY,
        meshes=[0.25],
        seed=7,
        output_dir=root,
        options={'identity_max': [2, 2], 'backend_max': [2, 2], 'fields': 3},
    )


def test_manifest_validation():
    for bad in ({'meshes': []}, {'meshes': [0.0]}, {'meshes': [0.5], 'Ns': [3]}, {'meshes': [0.5], 'ms': [-1]},
                {'meshes': [0.5], 'version': 99}):
        try:
            ExperimentManifest(name="bad", kind="besov", **bad)
            assert False, f"manifest {bad} must be rejected"
        except ValidationError:
            pass


def test_bundled_manifests_load():
    paths = sorted(MANIFESTS.glob("*.json"))
    assert len(paths) >= 7
    kinds = {load_manifest(p).kind for p in paths}
    assert kinds == set(ExperimentKind)


def test_manifest_hash():
    first = ExperimentManifest(name="h", kind="moments", meshes=[0.5], seed=1)
    moved = first.model_copy(update={'output_dir': Path("/elsewhere")})
    reseeded = first.model_copy(update={'seed': 2})
    assert first.content_hash() == moved.content_hash()
    assert first.content_hash() != reseeded.content_hash()
    assert len(first.content_hash()) == 64


def test_cell_key():
    cell = {'check': 'identity', 'width': 2, 'height': 1}
    key = cell_key("abc", cell, "v1")
    assert key == cell_key("abc", dict(reversed(list(cell.items()))), "v1")
    assert key != cell_key("abc", cell, "v2")
    assert key != cell_key("abd", cell, "v1")


def test_failed_cells_are_not_served():
    with tempfile.TemporaryDirectory() as tmp:
        cache = ResultCache(Path(tmp))
        cache.set(CellResult(key="bad", cell={}, status="failed", rows=[], summary={}, error="boom"))
        cache.set(CellResult(key="good", cell={'x': 1}, status="ok", rows=[{'table': 't', 'v': 1}], summary={}))
        assert cache.get("bad") is None
        assert cache.get("good").rows == [{'table': 't', 'v': 1}]
        assert cache.get_stats()['total_cached'] == 2
        cache.clear()
        assert not cache.has("good")


def test_cell_expansion():
    with tempfile.TemporaryDirectory() as tmp:
        cells = expand_cells(_small_identity_manifest(Path(tmp)))
    assert len(cells) == 8
    assert sum(c['check'] == 'backend' for c in cells) == 4


def test_acceptance_ids():
    tables = build_tables([], [name for names in KIND_TABLES.values() for name in names])
    criteria = evaluate_acceptance(tables)
    assert sorted(c['id'] for c in criteria) == list(range(1, 12))
    assert all(c['status'] == "not-run" for c in criteria)


def test_empty_tables_keep_headers():
    with tempfile.TemporaryDirectory() as tmp:
        tables = build_tables([], KIND_TABLES[ExperimentKind.SINGULARITY])
        files = write_tables(tables, Path(tmp))
        frame = load_table(Path(files['bc']))
    assert len(frame) == 0
    assert list(frame.columns) == TABLE_COLUMNS['bc']


def test_table_round_trip():
    rows = [{'table': 'lyapunov', 'mesh': 0.5, 'p': 2, 'norm': 1.25, 'ci_low': 1.0, 'ci_high': 1.5,
             'monotone': True, 'note': 'extra'}]
    with tempfile.TemporaryDirectory() as tmp:
        files = write_tables(build_tables(rows, ['lyapunov']), Path(tmp))
        frame = load_table(Path(files['lyapunov']))
    assert list(frame.columns) == TABLE_COLUMNS['lyapunov'] + ['note']
    assert frame.loc[0, 'norm'] == 1.25
    assert frame.loc[0, 'note'] == 'extra'


def test_rerun_is_cached_and_identical():
    with tempfile.TemporaryDirectory() as tmp:
        manifest = _small_identity_manifest(Path(tmp))
        first = run_experiment(manifest, workers=1, show_progress=False)
        assert first.cells_computed == 8 and not first.failures
        tables = {name: Path(path).read_bytes() for name, path in first.result_files.items()}

        second = run_experiment(manifest, workers=1, show_progress=False)
        assert second.cells_computed == 0 and second.cells_cached == 8
        for name, path in second.result_files.items():
            assert Path(path).read_bytes() == tables[name], f"{name} changed on rerun"

        loaded = RunRecord.load(first.root)
        assert loaded.cell_keys == first.cell_keys
        summary = json.loads(Path(first.result_files['summary']).read_text(encoding='utf-8'))
        status = {c['id']: c['status'] for c in summary['criteria']}
        assert status[1] == "pass" and status[2] == "pass"


def test_emit_report_json():
    with tempfile.TemporaryDirectory() as tmp:
        run = run_experiment(_small_identity_manifest(Path(tmp)), workers=1, show_progress=False)
        files = emit_report(run, fmt="json")
        assert set(files) == {'chaos_identity', 'backend_equivalence', 'summary'}
        table = load_json(Path(files['chaos_identity']))
        summary = load_json(Path(files['summary']))
    assert table['columns'][:len(TABLE_COLUMNS['chaos_identity'])] == TABLE_COLUMNS['chaos_identity']
    assert len(table['rows']) > 0
    assert all(set(row) == set(table['columns']) for row in table['rows'])
    assert summary['name'] == "identity-small"
    assert summary['rows']['chaos_identity'] == len(table['rows'])


def test_cli_rejects_invalid_manifest():
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "broken.json"
        path.write_text(json.dumps({'name': 'broken', 'kind': 'besov', 'meshes': []}), encoding='utf-8')
        assert cli_main(["run", str(path), "--out", tmp]) == 2


def test_cli_run_and_report():
    original = config.MANIFEST_DIR
    with tempfile.TemporaryDirectory() as tmp:
        presets = Path(tmp) / "presets"
        presets.mkdir()
        out = str(Path(tmp) / "runs")
        try:
            config.MANIFEST_DIR = presets
            assert cli_main(["run", "--out", out]) == 2
            data = _small_identity_manifest(Path(tmp)).model_dump(mode='json', exclude={'output_dir'})
            (presets / "identity.json").write_text(json.dumps(data), encoding='utf-8')
            assert cli_main(["run", "--out", out, "--threads", "1"]) == 0
        finally:
            config.MANIFEST_DIR = original
        assert cli_main(["report", "--out", out]) == 0
        summary = json.loads((Path(out) / "report" / "summary.json").read_text(encoding='utf-8'))
    assert summary['runs'] == ["identity-small"]
    assert len(summary['criteria']) == 11


def main():
    """Run all harness tests."""
    print("=" * 80)
    print("Harness Tests")
    print("=" * 80)

    tests = [
        test_manifest_validation, test_bundled_manifests_load, test_manifest_hash, test_cell_key,
        test_failed_cells_are_not_served, test_cell_expansion, test_acceptance_ids,
        test_empty_tables_keep_headers, test_table_round_trip, test_rerun_is_cached_and_identical,
        test_emit_report_json, test_cli_rejects_invalid_manifest, test_cli_run_and_report,
    ]
    failed = []
    for test in tests:
        try:
            test()
            print(f"✓ {test.__name__}")
        except Exception as e:
            print(f"✗ {test.__name__}: {e}")
            failed.append(test.__name__)

    print("=" * 80)
    if failed:
        print(f"❌ {len(failed)} of {len(tests)} tests failed")
        return 1
    print(f"✓ All {len(tests)} tests passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())

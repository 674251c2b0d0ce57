"""
Flat result tables and the acceptance summary.
"""
import logging
import math
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Optional, Tuple

import numpy as np
import pandas as pd
from scipy import stats

from ..persistence import load_json, save_json, save_table
from .experiments import KIND_TABLES, TABLE_COLUMNS
from .manifest import ExperimentKind

logger = logging.getLogger(__name__)

FORMATS = ("csv", "json")
SUMMARY_FILE = "summary.json"

PASS, FAIL, NOT_RUN = "pass", "fail", "not-run"

Tables = Dict[str, pd.DataFrame]
Verdict = Tuple[str, Dict[str, Any]]


def load_cell_rows(root: Path, keys: Iterable[str]) -> List[Dict[str, Any]]:
    """Rows of every completed cell, in the given key order."""
    rows = []
    for key in keys:
        path = root / "cells" / f"{key}.json"
        if not path.exists():
            continue
        result = load_json(path)
        if result['status'] == "ok":
            rows.extend(result['rows'])
    return rows


def _columns(table: str, rows: List[Dict[str, Any]]) -> List[str]:
    columns = list(TABLE_COLUMNS.get(table, []))
    for row in rows:
        for key in row:
            if key != 'table' and key not in columns:
                columns.append(key)
    return columns


def build_tables(rows: List[Dict[str, Any]], names: Iterable[str]) -> Tables:
    """Group tagged rows into one frame per table; listed tables exist even when empty."""
    grouped: Dict[str, List[Dict[str, Any]]] = {name: [] for name in names}
    for row in rows:
        grouped.setdefault(row['table'], []).append(row)
    return {name: pd.DataFrame([{k: v for k, v in r.items() if k != 'table'} for r in group],
                               columns=_columns(name, group))
            for name, group in grouped.items()}


def write_tables(tables: Tables, directory: Path, fmt: str = "csv") -> Dict[str, str]:
    if fmt not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}")
    files = {}
    for name, frame in sorted(tables.items()):
        if fmt == "csv":
            path = directory / f"{name}.csv"
            save_table(frame.to_dict('records'), path, list(frame.columns))
        else:
            path = directory / f"{name}.json"
            save_json({'columns': list(frame.columns), 'rows': frame.to_dict('records')}, path)
        files[name] = str(path)
    return files


# Acceptance criteria, each a function of the tables

def _nonempty(tables: Tables, name: str) -> Optional[pd.DataFrame]:
    frame = tables.get(name)
    return frame if frame is not None and len(frame) else None


def _max_error_below(tables: Tables, name: str, threshold: float) -> Verdict:
    frame = _nonempty(tables, name)
    if frame is None:
        return NOT_RUN, {}
    worst = float(frame['relative_error'].max())
    return (PASS if worst < threshold else FAIL), {'max_relative_error': worst, 'threshold': threshold,
                                                   'lattices': int(frame[['width', 'height']].drop_duplicates().shape[0])}


def chaos_identity(tables: Tables) -> Verdict:
    return _max_error_below(tables, 'chaos_identity', 1e-10)


def backend_equivalence(tables: Tables) -> Verdict:
    return _max_error_below(tables, 'backend_equivalence', 1e-12)


def one_point_scaling(tables: Tables) -> Verdict:
    frame = _nonempty(tables, 'scaling')
    if frame is None or len(frame) < 2:
        return NOT_RUN, {}
    frame = frame.sort_values('mesh')
    fine, coarse = frame.iloc[0], frame.iloc[1]
    # 2^{-1/8} for a mesh pair a, a/2
    target = float((fine['mesh'] / coarse['mesh']) ** (1.0 / 8.0))
    ratio = float(fine['center_mean'] / coarse['center_mean'])
    deviation = abs(ratio / target - 1.0)
    effective = float(frame['n_effective'].min())
    passed = deviation < 0.03 and effective >= 1000
    return (PASS if passed else FAIL), {'ratio': ratio, 'target': target, 'deviation': deviation,
                                        'min_effective_samples': effective}


def tanh_residuals(tables: Tables) -> Verdict:
    frame = _nonempty(tables, 'tanh_fit')
    if frame is None:
        return NOT_RUN, {}
    exponents = {r['moment']: float(r['exponent']) for r in frame.to_dict('records')}
    needed = [exponents.get(m, math.nan) for m in ('re', 're2')]
    passed = all(e > 2.0 for e in needed)
    return (PASS if passed else FAIL), {'exponents': exponents}


def lindeberg_gap(tables: Tables) -> Verdict:
    frame = _nonempty(tables, 'lindeberg')
    if frame is None:
        return NOT_RUN, {}
    checks = []
    for l, group in frame.groupby('l'):
        high = group.loc[group['max_influence'].idxmax()]
        low = group.loc[group['max_influence'].idxmin()]
        if high['max_influence'] < 10.0 * low['max_influence']:
            continue
        gap_ratio = float(high['gap'] / low['gap']) if low['gap'] > 0 else math.inf
        checks.append({'l': int(l), 'influence_ratio': float(high['max_influence'] / low['max_influence']),
                       'gap_ratio': gap_ratio, 'passed': gap_ratio >= 3.0})
    if not checks:
        return NOT_RUN, {'reason': "no mesh pair reduces the influence tenfold"}
    return (PASS if all(c['passed'] for c in checks) else FAIL), {'checks': checks}


def besov_sharpness(tables: Tables) -> Verdict:
    frame = _nonempty(tables, 'besov_norm')
    if frame is None or frame['mesh'].nunique() < 2:
        return NOT_RUN, {}
    detail = {}
    passed = True
    tight = frame[np.isclose(frame['alpha'], -0.2)]
    if len(tight):
        spread = float(tight['norm'].max() / tight['norm'].min())
        detail['spread_at_minus_0.2'] = spread
        passed &= spread < 2.0
    loose = frame[np.isclose(frame['alpha'], -0.05)].sort_values('mesh', ascending=False)
    if len(loose):
        increasing = bool(np.all(np.diff(loose['norm'].to_numpy()) > 0))
        detail['increasing_at_minus_0.05'] = increasing
        passed &= increasing
    if not detail:
        return NOT_RUN, {}
    return (PASS if passed else FAIL), detail


def subdomain_integration(tables: Tables) -> Verdict:
    frame = _nonempty(tables, 'subdomain')
    if frame is None:
        return NOT_RUN, {}
    smooth = frame[frame['check'] == 'smooth']
    rough = frame[frame['check'] == 'rough']
    detail = {'smooth_pairs': int(len(smooth)), 'rough_pairs': int(len(rough))}
    passed = True
    if len(smooth):
        detail['max_smooth_relative_error'] = float(smooth['relative_error'].max())
        passed &= detail['max_smooth_relative_error'] < 1e-3
    if len(rough):
        detail['rough_within_tail'] = int((rough['error'] <= rough['tail_bound']).sum())
        passed &= detail['rough_within_tail'] == len(rough)
    return (PASS if passed else FAIL), detail


def _bc_stderr(frame: pd.DataFrame, confidence: float = 0.95) -> pd.Series:
    return (frame['ci_high'] - frame['ci_low']) / (2.0 * stats.norm.ppf(0.5 + 0.5 * confidence))


def singularity_trend(tables: Tables) -> Verdict:
    frame = _nonempty(tables, 'bc')
    if frame is None:
        return NOT_RUN, {}
    disordered = frame[~frame['control'].astype(bool)]
    control = frame[frame['control'].astype(bool)]
    checks = []
    for (mesh, m), group in disordered.groupby(['mesh', 'm']):
        group = group.sort_values('N')
        decreasing = bool(np.all(np.diff(group['bc'].to_numpy()) < 0))
        separated = bool(group.iloc[0]['ci_low'] > group.iloc[-1]['ci_high'])
        checks.append({'mesh': float(mesh), 'm': int(m), 'decreasing': decreasing, 'separated': separated})
    control_ok = bool(np.all((control['ci_low'] <= 1.0 + 1e-12) & (control['ci_high'] >= 1.0 - 1e-12)))
    passed = bool(checks) and all(c['decreasing'] and c['separated'] for c in checks) and control_ok
    return (PASS if passed else FAIL), {'checks': checks, 'control_cells': int(len(control)),
                                        'control_within_ci': control_ok}


def certificate_soundness(tables: Tables) -> Verdict:
    bc = _nonempty(tables, 'bc')
    certificate = _nonempty(tables, 'certificate')
    if bc is None or certificate is None:
        return NOT_RUN, {}
    bc = bc[~bc['control'].astype(bool)].assign(bc_stderr=lambda f: _bc_stderr(f))
    merged = certificate.merge(bc[['mesh', 'N', 'm', 'bc', 'bc_stderr']], on=['mesh', 'N', 'm'])
    if not len(merged):
        return NOT_RUN, {}
    slack = merged['product_bound'] - (merged['bc'] - 3.0 * merged['bc_stderr'])
    return (PASS if bool((slack >= 0).all()) else FAIL), {'cells': int(len(merged)),
                                                          'min_slack': float(slack.min())}


def moment_bounds(tables: Tables) -> Verdict:
    detail = {}
    verdicts = []
    pz = _nonempty(tables, 'paley_zygmund')
    if pz is not None:
        detail['paley_zygmund'] = bool(pz['holds'].astype(bool).all())
        verdicts.append(detail['paley_zygmund'])
    positive = _nonempty(tables, 'positive_moments')
    if positive is not None and len(positive[positive['p'] == 2.0]):
        detail['second_moment_bound'] = bool(positive[positive['p'] == 2.0]['holds'].astype(bool).all())
        verdicts.append(detail['second_moment_bound'])
    tail = _nonempty(tables, 'tail_fit')
    if tail is not None:
        gaussian = tail[tail['gamma'].notna()]
        if len(gaussian):
            detail['min_tail_slope'] = float(gaussian['slope'].min())
            verdicts.append(bool(gaussian['slope'].min() >= 1.5))
    if len(verdicts) < 3:
        return (FAIL if not all(verdicts) else NOT_RUN), detail
    return (PASS if all(verdicts) else FAIL), detail


def conditional_gaussian(tables: Tables) -> Verdict:
    frame = _nonempty(tables, 'conditional')
    if frame is None:
        return NOT_RUN, {}
    oracle_ok = bool((frame['z_score'].abs() <= 3.0).all())
    mean_ok = bool(((frame['w_mean'] - 1.0).abs() <= 3.0 * frame['w_stderr']).all())
    return (PASS if oracle_ok and mean_ok else FAIL), {'cases': int(len(frame)), 'oracle_within_3se': oracle_ok,
                                                       'w_mean_within_3se': mean_ok}


CRITERIA: List[Tuple[int, str, Callable[[Tables], Verdict]]] = [
    (1, "chaos-partition identity", chaos_identity),
    (2, "backend equivalence", backend_equivalence),
    (3, "one-point scaling exponent", one_point_scaling),
    (4, "tanh moment residuals", tanh_residuals),
    (5, "Lindeberg gap", lindeberg_gap),
    (6, "Besov sharpness", besov_sharpness),
    (7, "subdomain integration", subdomain_integration),
    (8, "singularity trend", singularity_trend),
    (9, "certificate soundness", certificate_soundness),
    (10, "moments", moment_bounds),
    (11, "conditional Gaussian", conditional_gaussian),
]


def evaluate_acceptance(tables: Tables) -> List[Dict[str, Any]]:
    """One entry per criterion ID with status pass, fail or not-run."""
    results = []
    for cid, name, check in CRITERIA:
        try:
            status, detail = check(tables)
        except Exception as e:
            logger.error(f"Criterion {cid} could not be evaluated: {e}", exc_info=True)
            status, detail = FAIL, {'error': f"{type(e).__name__}: {e}"}
        results.append({'id': cid, 'name': name, 'status': status, 'detail': detail})
    return results


def _write_summary(tables: Tables, directory: Path, extra: Dict[str, Any]) -> Path:
    criteria = evaluate_acceptance(tables)
    counts = {s: sum(c['status'] == s for c in criteria) for s in (PASS, FAIL, NOT_RUN)}
    path = directory / SUMMARY_FILE
    save_json({**extra, 'criteria': criteria, 'counts': counts,
               'rows': {name: int(len(frame)) for name, frame in sorted(tables.items())}}, path)
    logger.info(f"Acceptance: {counts[PASS]} pass, {counts[FAIL]} fail, {counts[NOT_RUN]} not run")
    return path


def emit_report(run, fmt: str = "csv") -> Dict[str, str]:
    """
    Write the tables of one run and its acceptance summary.

    Works on partial runs: only completed cells contribute rows, and every
    table of the run's kind is written, with headers only when empty.

    Args:
        run: RunRecord
        fmt: "csv" or "json" for the tables

    Returns:
        Mapping from table name (and "summary") to the written file
    """
    root = run.root
    rows = load_cell_rows(root, run.cell_keys)
    tables = build_tables(rows, KIND_TABLES[ExperimentKind(run.kind)])
    files = write_tables(tables, root / "tables", fmt)
    files['summary'] = str(_write_summary(tables, root, {
        'name': run.name, 'kind': run.kind, 'manifest_hash': run.manifest_hash,
        'code_version': run.code_version, 'failed_cells': len(run.failures),
    }))
    return files


def emit_combined_report(output_root: Path, fmt: str = "csv") -> Dict[str, str]:
    """
    Merge the tables of every run under an output root and evaluate all criteria together.

    Writes to <output_root>/report.
    """
    from .runner import RECORD_FILE, RunRecord

    rows: List[Dict[str, Any]] = []
    names: List[str] = []
    runs = []
    for record in sorted(Path(output_root).glob(f"*/{RECORD_FILE}")):
        run = RunRecord.load(record.parent)
        runs.append(run.name)
        rows.extend(load_cell_rows(record.parent, run.cell_keys))
        names.extend(KIND_TABLES[ExperimentKind(run.kind)])
    logger.info(f"Combining {len(runs)} runs from {output_root}")
    tables = build_tables(rows, dict.fromkeys(names))
    directory = Path(output_root) / "report"
    files = write_tables(tables, directory / "tables", fmt)
    files['summary'] = str(_write_summary(tables, directory, {'runs': runs}))
    return files

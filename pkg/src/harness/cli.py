"""
Command-line interface: one subcommand per module plus manifest runs and reports.
"""
import argparse
import json
import logging
from pathlib import Path
from typing import List, Optional

import numpy as np
from pydantic import ValidationError

from ..besov.functionals import piecewise_magnetisation
from ..besov.mra import besov_holder_norm
from ..besov.wavelets import build_wavelet_basis
from ..chaos.kernel import build_chaos_kernel
from ..chaos.lindeberg import influence_and_lindeberg_bound
from ..config import config
from ..disorder.field import build_external_field, lambda_scale
from ..disorder.laws import DisorderLaw, sample_disorder
from ..disorder.profiles import constant, l2_norm_squared
from ..errors import LabError
from ..ising.exact import exact_correlations
from ..ising.model import ModelParams
from ..ising.partition import choose_backend, prefactor_check, rescaled_partition
from ..ising.sampler import sample_gibbs, sampled_correlations
from ..lattice.blocks import build_block_grid
from ..lattice.domain import dump_lattice, rectangle_lattice, unit_square_lattice
from ..moments.hypercontractivity import positive_moment_bound_check
from ..moments.tails import negative_tail_check, paley_zygmund_check
from ..persistence import dumps_json, save_json, save_table
from ..singularity.histogram import bc_curve, bhattacharyya_fractional_moment, choose_resolution
from ..singularity.sampling import PURE_STREAM, draw_disordered, feature_samples
from .manifest import load_manifest
from .report import FORMATS, emit_combined_report
from .runner import run_experiment

logger = logging.getLogger(__name__)


def _output_root(args) -> Path:
    root = Path(args.out) if args.out else config.OUTPUT_DIR
    root.mkdir(parents=True, exist_ok=True)
    return root


def _emit(result, args, name: str):
    path = _output_root(args) / f"{name}.json"
    save_json(result, path)
    print(dumps_json(result))
    logger.info(f"Wrote {path}")


def cmd_exact(args) -> int:
    lattice = rectangle_lattice(args.width, args.height, mesh=args.mesh)
    lam = constant(args.lam)
    omega = sample_disorder(lattice, DisorderLaw(args.law), args.seed)
    ext = build_external_field(lattice, lam, None, omega=omega)
    params = ModelParams(field=ext.xi, lam_l2_squared=l2_norm_squared(lam, lattice.spec))
    backend = choose_backend(lattice, exact_only=True) if args.backend == "auto" else args.backend
    value = rescaled_partition(lattice, params, backend)
    result = {'width': args.width, 'height': args.height, 'mesh': lattice.mesh, 'backend': backend,
              'rescaled_partition': value, 'seed': args.seed,
              'prefactor': prefactor_check(lattice, lam, omega)}
    if args.correlations:
        corr = exact_correlations(lattice, ModelParams(), k_max=args.correlations)
        path = _output_root(args) / f"correlations_{args.width}x{args.height}.csv"
        corr.to_csv(path)
        result['one_point'] = corr.one_point().tolist()
        result['correlations_file'] = str(path)
    _emit(result, args, "exact")
    return 0


def cmd_sample(args) -> int:
    lattice = unit_square_lattice(args.n)
    run = sample_gibbs(lattice, ModelParams(), args.sweeps, args.seed, algorithm=args.algorithm,
                       show_progress=True)
    centre = lattice.n_sites // 2
    series = run.spins[:, centre].astype(float)
    if args.snapshot:
        root = _output_root(args)
        run.save_snapshot(root / f"snapshot_{args.n}.bin")
        dump_lattice(lattice, root / f"lattice_{args.n}.csv")
        sampled_correlations(run, 2, lattice).to_csv(root / f"correlations_{args.n}.csv")
    result = {**run.metadata(), 'center_mean': float(series.mean()), 'center_stderr': run.standard_error(series),
              'n_effective': run.n_effective}
    _emit(result, args, "sample")
    return 0


def cmd_chaos(args) -> int:
    lattice = rectangle_lattice(args.side, args.side, mesh=args.mesh)
    corr = exact_correlations(lattice, ModelParams(), k_max=args.degree)
    kernel = build_chaos_kernel(corr, lambda_scale(lattice.mesh) * args.lam, args.degree)
    report = influence_and_lindeberg_bound([kernel], DisorderLaw(args.law), DisorderLaw.GAUSSIAN,
                                           replicas=args.replicas, seed=args.seed)
    _emit(report.to_dict(), args, "chaos")
    return 0


def cmd_besov(args) -> int:
    lattice = unit_square_lattice(args.n)
    run = sample_gibbs(lattice, ModelParams(), args.sweeps, args.seed, algorithm="wolff")
    basis = build_wavelet_basis(order=args.order, alpha=args.alpha)
    n_max = args.n_max or int(np.log2(args.n)) + 1
    norm = besov_holder_norm(piecewise_magnetisation(lattice, run.spins[-1]), args.alpha, n_max, basis)
    _emit({**norm.to_dict(), 'mesh': lattice.mesh}, args, "besov")
    return 0


def cmd_singularity(args) -> int:
    lattice = unit_square_lattice(args.n)
    lam = constant(args.lam)
    run = sample_gibbs(lattice, ModelParams(), args.sweeps, args.seed, show_progress=True, stream=PURE_STREAM)
    draws = draw_disordered(lattice, lam, args.replicas, args.replica_sweeps, args.seed, show_progress=True)
    rows = []
    for N in args.N:
        samples = feature_samples(run, draws, lam, build_block_grid(lattice, N), seed=args.seed)
        pure, disordered = samples.features()
        rows += [{'mesh': lattice.mesh, **row} for row in bc_curve(pure, disordered, N, args.m, seed=args.seed)]
        m = choose_resolution(pure, N, args.m)
        estimate = bhattacharyya_fractional_moment(pure, disordered, m, N, seed=args.seed)
        print(f"N={N}: BC at m={m} is {estimate.value:.4f} ± {estimate.stderr:.4f}")
    path = _output_root(args) / "singularity.csv"
    frame = save_table(rows, path)
    print(frame.to_string(index=False))
    return 0


def cmd_moments(args) -> int:
    lattice = rectangle_lattice(args.side, args.side, mesh=args.mesh)
    lam = constant(args.lam)
    law = DisorderLaw(args.law)
    result = {
        'positive': [positive_moment_bound_check(lattice, lam, None, p=p, replicas=args.replicas, law=law,
                                                 seed=args.seed).to_dict() for p in args.p],
        'paley_zygmund': paley_zygmund_check(lattice, lam, None, replicas=args.replicas, law=law, seed=args.seed),
        'tail': negative_tail_check(lattice, lam, None, replicas=args.replicas, law=law, seed=args.seed).to_dict(),
    }
    _emit(result, args, "moments")
    return 0


def cmd_run(args) -> int:
    status = 0
    paths = args.manifests or sorted(str(p) for p in config.MANIFEST_DIR.glob("*.json"))
    if not paths:
        logger.error(f"No manifests given and none found in {config.MANIFEST_DIR}")
        return 2
    for path in paths:
        manifest = load_manifest(Path(path))
        if args.seed_given:
            manifest = manifest.model_copy(update={'seed': args.seed})
        record = run_experiment(manifest, workers=args.threads, out=Path(args.out) if args.out else None)
        print(json.dumps({'name': record.name, 'output_dir': record.output_dir,
                          'cells_computed': record.cells_computed, 'cells_cached': record.cells_cached,
                          'failures': len(record.failures)}))
        status |= 1 if record.failures else 0
    return status


def cmd_report(args) -> int:
    files = emit_combined_report(_output_root(args), args.format)
    print(files['summary'])
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="Master seed (default RFIM_MASTER_SEED)")
    common.add_argument("--threads", type=int, default=config.MAX_WORKERS, help="Worker processes")
    common.add_argument("--out", type=str, default=None, help="Output root (default RFIM_OUTPUT_DIR)")

    parser = argparse.ArgumentParser(prog="rfim_lab", description="Critical random field Ising laboratory")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("exact", parents=[common], help="Exact rescaled partition function of a rectangle")
    p.add_argument("--width", type=int, default=3)
    p.add_argument("--height", type=int, default=3)
    p.add_argument("--mesh", type=float, default=0.25)
    p.add_argument("--lam", type=float, default=1.0)
    p.add_argument("--law", choices=[law.value for law in DisorderLaw], default="gaussian")
    p.add_argument("--backend", choices=["auto", "enumeration", "transfer"], default="auto")
    p.add_argument("--correlations", type=int, default=0, help="Also write correlations up to this order")
    p.set_defaults(handler=cmd_exact)

    p = sub.add_parser("sample", parents=[common], help="Pure critical model on the unit square")
    p.add_argument("--n", type=int, default=32, help="Inverse mesh")
    p.add_argument("--sweeps", type=int, default=10_000)
    p.add_argument("--algorithm", choices=["heatbath", "wolff"], default="wolff")
    p.add_argument("--snapshot", action="store_true")
    p.set_defaults(handler=cmd_sample)

    p = sub.add_parser("chaos", parents=[common], help="Chaos kernel and Lindeberg swap gap")
    p.add_argument("--side", type=int, default=3)
    p.add_argument("--mesh", type=float, default=0.25)
    p.add_argument("--lam", type=float, default=1.0)
    p.add_argument("--degree", type=int, default=3)
    p.add_argument("--law", choices=[law.value for law in DisorderLaw], default="rademacher")
    p.add_argument("--replicas", type=int, default=100_000)
    p.set_defaults(handler=cmd_chaos)

    p = sub.add_parser("besov", parents=[common], help="Besov-Hölder norm of a pure magnetisation field")
    p.add_argument("--n", type=int, default=32)
    p.add_argument("--sweeps", type=int, default=2000)
    p.add_argument("--alpha", type=float, default=-0.2)
    p.add_argument("--n-max", type=int, default=None)
    p.add_argument("--order", type=int, default=None)
    p.set_defaults(handler=cmd_besov)

    p = sub.add_parser("singularity", parents=[common], help="Bhattacharyya curves over N and m")
    p.add_argument("--n", type=int, default=16)
    p.add_argument("--lam", type=float, default=1.0)
    p.add_argument("--N", type=int, nargs="+", default=[1, 2, 4])
    p.add_argument("--m", type=int, nargs="+", default=[2, 3, 4])
    p.add_argument("--sweeps", type=int, default=4000)
    p.add_argument("--replicas", type=int, default=500)
    p.add_argument("--replica-sweeps", type=int, default=200)
    p.set_defaults(handler=cmd_singularity)

    p = sub.add_parser("moments", parents=[common], help="Moments, tails and Paley-Zygmund on a small square")
    p.add_argument("--side", type=int, default=2)
    p.add_argument("--mesh", type=float, default=1.0 / 3.0)
    p.add_argument("--lam", type=float, default=1.0)
    p.add_argument("--law", choices=[law.value for law in DisorderLaw], default="gaussian")
    p.add_argument("--p", type=float, nargs="+", default=[2.0, 4.0])
    p.add_argument("--replicas", type=int, default=100_000)
    p.set_defaults(handler=cmd_moments)

    p = sub.add_parser("run", parents=[common], help="Run experiment manifests")
    p.add_argument("manifests", nargs="*", help="Manifest files (default: every preset in RFIM_MANIFEST_DIR)")
    p.set_defaults(handler=cmd_run)

    p = sub.add_parser("report", parents=[common], help="Combined tables and acceptance summary")
    p.add_argument("--format", choices=list(FORMATS), default="csv")
    p.set_defaults(handler=cmd_report)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.seed_given = args.seed is not None
    if args.seed is None:
        args.seed = config.MASTER_SEED
    try:
        return args.handler(args)
    except ValidationError as e:
        logger.error(f"Invalid manifest:\n{e}")
        return 2
    except LabError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return 1

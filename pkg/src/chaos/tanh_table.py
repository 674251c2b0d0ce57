"""
Moments of tanh(xi^a + i phi~^a) against their leading-order terms.
"""
import logging
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from numpy.polynomial.hermite_e import hermegauss
from numpy.polynomial.legendre import leggauss

from ..disorder.field import MAGNETISATION_EXPONENT, h_scale, lambda_scale
from ..disorder.laws import SQRT3, DisorderLaw, draw
from ..disorder.profiles import Profile, constant
from .. import rng as keyed

logger = logging.getLogger(__name__)

MOMENTS = ("re", "re2", "im", "im2", "reim")
LEADING = {"re": "h_a", "re2": "lam_a2", "im": "phi_a", "im2": "phi_a2", "reim": "h_phi_a"}

_QUADRATURE_NODES = 120


def law_quadrature(law: DisorderLaw, nodes: int = _QUADRATURE_NODES) -> Tuple[np.ndarray, np.ndarray]:
    """
    Nodes and probability weights integrating polynomials exactly against a law.

    Gauss-Hermite (probabilists') for Gaussian, the two atoms for
    Rademacher, Gauss-Legendre on [-√3, √3] for uniform.
    """
    law = DisorderLaw(law)
    if law is DisorderLaw.GAUSSIAN:
        x, w = hermegauss(nodes)
        return x, w / np.sqrt(2.0 * np.pi)
    if law is DisorderLaw.RADEMACHER:
        return np.array([-1.0, 1.0]), np.array([0.5, 0.5])
    x, w = leggauss(nodes)
    return SQRT3 * x, 0.5 * w


def _cell_integral_at(profile: Profile, point: Tuple[float, float], a: float) -> float:
    t, w = leggauss(2)
    h = 0.5 * a
    gx, gy = np.meshgrid(point[0] + h * t, point[1] + h * t, indexing='ij')
    return float(np.sum(np.outer(w, w) * profile(gx, gy)) * h * h)


def _moments(values: np.ndarray, weights: Optional[np.ndarray] = None) -> Dict[str, float]:
    re, im = values.real, values.imag
    terms = {"re": re, "re2": re ** 2, "im": im, "im2": im ** 2, "reim": re * im}
    if weights is None:
        out = {k: float(v.mean()) for k, v in terms.items()}
        n = len(values)
        out.update({f"{k}_stderr": float(v.std(ddof=1) / np.sqrt(n)) for k, v in terms.items()})
        return out
    out = {k: float(np.dot(weights, v)) for k, v in terms.items()}
    out.update({f"{k}_stderr": 0.0 for k in terms})
    return out


def tanh_moment_table(
    law: DisorderLaw,
    meshes: Sequence[float],
    lam: Optional[Profile] = None,
    h: Optional[Profile] = None,
    phi: Optional[Profile] = None,
    point: Tuple[float, float] = (0.5, 0.5),
    n_samples: Optional[int] = None,
    seed: int = 0,
) -> pd.DataFrame:
    """
    E[Re], E[Re²], E[Im], E[Im²], E[Re Im] of tanh(lambda^a omega + h^a + i phi~^a).

    Moments are computed by quadrature against the law unless n_samples is
    given, in which case they are Monte Carlo means with standard errors.
    Each row holds one mesh with the leading terms h^a, (lambda^a)², phi~^a,
    (phi~^a)², h^a phi~^a and the residuals (moment minus leading term).

    Args:
        law: Disorder law
        meshes: Mesh sizes a
        lam: Disorder strength (default 1)
        h: Deterministic field (default 0)
        phi: Test function (default 0)
        point: Site position x
        n_samples: Monte Carlo sample size (quadrature if omitted)
        seed: Master seed for Monte Carlo

    Returns:
        DataFrame with one row per mesh
    """
    lam = lam or constant(1.0)
    h = h or constant(0.0)
    phi = phi or constant(0.0)
    lam_x = float(lam(*point))
    h_x = float(h(*point))
    rows = []
    for k, a in enumerate(meshes):
        lam_a = lambda_scale(a) * lam_x
        h_a = h_scale(a) * h_x
        phi_a = a ** (-MAGNETISATION_EXPONENT) * _cell_integral_at(phi, point, a)
        if n_samples is None:
            nodes, weights = law_quadrature(law)
            values = np.tanh(lam_a * nodes + h_a + 1j * phi_a)
            moments = _moments(values, weights)
        else:
            omega = draw(law, n_samples, keyed.generator(seed, "tanh-moments", 0, k))
            moments = _moments(np.tanh(lam_a * omega + h_a + 1j * phi_a))
        row = {
            'law': DisorderLaw(law).value, 'mesh': a, 'method': 'quadrature' if n_samples is None else 'monte_carlo',
            'h_a': h_a, 'lam_a2': lam_a ** 2, 'phi_a': phi_a, 'phi_a2': phi_a ** 2, 'h_phi_a': h_a * phi_a,
        }
        row.update(moments)
        for moment, leading in LEADING.items():
            row[f"{moment}_residual"] = row[moment] - row[leading]
        rows.append(row)
    return pd.DataFrame(rows)


def fit_residual_exponent(table: pd.DataFrame, moment: str) -> float:
    """
    Least-squares slope of log|residual| against log a.

    Args:
        table: Output of tanh_moment_table over several meshes
        moment: One of MOMENTS

    Returns:
        Fitted exponent p in |residual| ~ a^p
    """
    residual = np.abs(table[f"{moment}_residual"].to_numpy(dtype=float))
    mesh = table['mesh'].to_numpy(dtype=float)
    keep = residual > 0
    if keep.sum() < 2:
        raise ValueError(f"need at least two nonzero residuals for {moment}")
    slope, _ = np.polyfit(np.log(mesh[keep]), np.log(residual[keep]), 1)
    logger.info(f"Residual of E[{moment}] scales like a^{slope:.3f}")
    return float(slope)

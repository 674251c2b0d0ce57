"""
Named profile presets for lambda, h and test functions phi.
"""
import logging
from dataclasses import dataclass
from typing import Callable, Literal, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from pydantic import BaseModel

from ..lattice.domain import DomainSpec, Lattice, points_in_polygon

logger = logging.getLogger(__name__)


class ProfileSpec(BaseModel):
    """Manifest description of a profile."""
    preset: Literal["constant", "bump", "linear"] = "constant"
    value: float = 1.0
    amplitude: float = 1.0
    center: Tuple[float, float] = (0.5, 0.5)
    radius: float = 0.5
    slope: Tuple[float, float] = (0.0, 0.0)


@dataclass(frozen=True)
class Profile:
    """Bounded C¹ function on the plane, vectorized over coordinates."""
    name: str
    fn: Callable[[np.ndarray, np.ndarray], np.ndarray]

    def __call__(self, x, y) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return np.broadcast_to(self.fn(x, y), np.broadcast(x, y).shape).astype(float)

    def at(self, points: np.ndarray) -> np.ndarray:
        """Evaluate at points of shape (n, 2)."""
        return self(points[:, 0], points[:, 1])

    def _sample(self, spec: DomainSpec, resolution: int = 257) -> np.ndarray:
        x0, x1, y0, y1 = spec.bounding_box
        gx, gy = np.meshgrid(np.linspace(x0, x1, resolution), np.linspace(y0, y1, resolution))
        return self(gx, gy).ravel()

    def sup(self, spec: DomainSpec) -> float:
        """Sup of |f| over the closure of the domain's bounding box (grid estimate)."""
        return float(np.max(np.abs(self._sample(spec))))

    def inf(self, spec: DomainSpec) -> float:
        """Inf of f over the closure of the domain's bounding box (grid estimate)."""
        return float(np.min(self._sample(spec)))

    def is_zero(self) -> bool:
        return self.name == "zero"


def _bump_shape(x, y, center, radius):
    r2 = ((x - center[0]) ** 2 + (y - center[1]) ** 2) / radius ** 2
    out = np.zeros(np.broadcast(x, y).shape)
    inside = r2 < 1.0
    with np.errstate(divide='ignore', over='ignore'):
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - np.broadcast_to(r2, out.shape)[inside]))
    return out


def constant(value: float) -> Profile:
    if value == 0.0:
        return Profile("zero", lambda x, y: np.zeros(np.broadcast(x, y).shape))
    return Profile(f"constant({value:g})", lambda x, y: np.full(np.broadcast(x, y).shape, float(value)))


def bump(center=(0.5, 0.5), radius: float = 0.5, amplitude: float = 1.0, value: float = 0.0) -> Profile:
    """value + amplitude * exp(1 - 1/(1 - |x-c|²/R²)) inside the disc, value outside."""
    return Profile(
        f"bump(c={tuple(center)}, R={radius:g}, A={amplitude:g}, v={value:g})",
        lambda x, y: value + amplitude * _bump_shape(x, y, center, radius),
    )


def linear(value: float = 1.0, slope=(0.0, 0.0), center=(0.5, 0.5)) -> Profile:
    """value + slope · (x - center)."""
    return Profile(
        f"linear(v={value:g}, g={tuple(slope)})",
        lambda x, y: value + slope[0] * (x - center[0]) + slope[1] * (y - center[1]),
    )


def make_profile(spec: ProfileSpec) -> Profile:
    """Resolve a manifest preset."""
    if spec.preset == "constant":
        return constant(spec.value)
    if spec.preset == "bump":
        return bump(spec.center, spec.radius, spec.amplitude, spec.value)
    return linear(spec.value, spec.slope, spec.center)


_GL2_NODES, _GL2_WEIGHTS = leggauss(2)


def cell_integrals(profile: Profile, lattice: Lattice) -> np.ndarray:
    """
    Integrals of a profile over every cell S_a(x), 2x2 Gauss-Legendre per cell.

    Exact for bilinear profiles.
    """
    h = 0.5 * lattice.mesh
    pts = lattice.interior_sites
    total = np.zeros(lattice.n_sites)
    for xi, wx in zip(_GL2_NODES, _GL2_WEIGHTS):
        for eta, wy in zip(_GL2_NODES, _GL2_WEIGHTS):
            total += wx * wy * profile(pts[:, 0] + h * xi, pts[:, 1] + h * eta)
    return total * h * h


def l2_norm_squared(profile: Profile, spec: DomainSpec, nodes: int = 64, resolution: int = 1024) -> float:
    """
    ||f||²_{L²(Omega)} by quadrature.

    Tensor Gauss-Legendre on axis-aligned rectangles, masked midpoint rule
    on general polygons.
    """
    x0, x1, y0, y1 = spec.bounding_box
    if spec.is_axis_rectangle():
        t, w = leggauss(nodes)
        xs = 0.5 * (x1 - x0) * t + 0.5 * (x1 + x0)
        ys = 0.5 * (y1 - y0) * t + 0.5 * (y1 + y0)
        gx, gy = np.meshgrid(xs, ys, indexing='ij')
        weights = np.outer(w, w) * 0.25 * (x1 - x0) * (y1 - y0)
        return float(np.sum(weights * profile(gx, gy) ** 2))
    hx, hy = (x1 - x0) / resolution, (y1 - y0) / resolution
    xs = x0 + (np.arange(resolution) + 0.5) * hx
    ys = y0 + (np.arange(resolution) + 0.5) * hy
    gx, gy = np.meshgrid(xs, ys, indexing='ij')
    pts = np.stack([gx.ravel(), gy.ravel()], axis=1)
    mask = points_in_polygon(pts, spec.vertices)
    return float(np.sum(profile(pts[mask, 0], pts[mask, 1]) ** 2) * hx * hy)

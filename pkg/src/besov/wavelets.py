"""
Compactly supported orthonormal wavelets: filters, cascade tables and Gram matrices.
"""
import logging
import math
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np
from numpy.polynomial import polynomial as P

from ..config import config
from ..errors import InsufficientRegularity

logger = logging.getLogger(__name__)

FAMILIES = ("haar", "daubechies")

# Hölder exponent of the Daubechies scaling function with p vanishing moments
DAUBECHIES_HOLDER = {
    1: 0.0,
    2: 0.550,
    3: 1.088,
    4: 1.618,
    5: 1.969,
    6: 2.189,
    7: 2.460,
    8: 2.761,
    9: 3.074,
    10: 3.381,
}


def daubechies_filter(p: int) -> np.ndarray:
    """
    Low-pass filter of the Daubechies wavelet with p vanishing moments.

    Spectral factorization: the roots inside the unit circle of
    z^{p-1} Σ_k C(p-1+k, k) ((2 - z - 1/z)/4)^k are combined with the
    p-fold zero at z = -1, and the result is normalized to Σ h = √2.

    Args:
        p: Number of vanishing moments (1 gives Haar)

    Returns:
        Filter of length 2p
    """
    if p < 1:
        raise ValueError(f"order must be at least 1, got {p}")
    if p == 1:
        return np.array([1.0, 1.0]) / math.sqrt(2.0)
    # y(z) * z as a polynomial in z (lowest degree first): (-1 + 2z - z²)/4
    y_times_z = np.array([-0.25, 0.5, -0.25])
    q = np.zeros(2 * p - 1)
    for k in range(p):
        term = np.array([float(math.comb(p - 1 + k, k))])
        for _ in range(k):
            term = P.polymul(term, y_times_z)
        # shift by z^{p-1-k} so every term carries z^{p-1}
        q[p - 1 - k:p - 1 - k + len(term)] += term
    roots = P.polyroots(q)
    inside = roots[np.abs(roots) < 1.0]
    h = P.polymul(P.polyfromroots(inside), P.polypow(np.array([1.0, 1.0]), p))
    h = np.real(h)[::-1]
    return h * math.sqrt(2.0) / h.sum()


def highpass_filter(h: np.ndarray) -> np.ndarray:
    """g_k = (-1)^k h_{L-1-k}."""
    length = len(h)
    return np.array([(-1) ** k * h[length - 1 - k] for k in range(length)])


def _cascade_integer_values(h: np.ndarray) -> np.ndarray:
    """phi at the integers 0..L-1: the eigenvector of M[n, m] = √2 h_{2n-m} with Σ phi(n) = 1."""
    length = len(h)
    m = np.zeros((length, length))
    for n in range(length):
        for k in range(length):
            idx = 2 * n - k
            if 0 <= idx < length:
                m[n, k] = math.sqrt(2.0) * h[idx]
    values, vectors = np.linalg.eig(m)
    best = int(np.argmin(np.abs(values - 1.0)))
    v = np.real(vectors[:, best])
    return v / v.sum()


def cascade_tables(h: np.ndarray, depth: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    phi and psi at the dyadic points i / 2^depth of their support [0, L-1].

    Args:
        h: Low-pass filter
        depth: Dyadic depth J

    Returns:
        (phi_table, psi_table), each of length (L-1) 2^J + 1
    """
    length = len(h)
    size = (length - 1) * (1 << depth) + 1
    if length == 2:
        grid = np.arange(size) / (1 << depth)
        phi = (grid < 1.0).astype(float)
        psi = np.where(grid < 0.5, 1.0, -1.0) * phi
        return phi, psi

    table = _cascade_integer_values(h)
    for j in range(1, depth + 1):
        step = 1 << (j - 1)
        finer = np.zeros((length - 1) * (1 << j) + 1)
        for k, hk in enumerate(h):
            # phi(i/2^j) = √2 Σ_k h_k phi((i - k 2^{j-1}) / 2^{j-1})
            idx = np.arange(len(finer)) - k * step
            valid = (idx >= 0) & (idx < len(table))
            finer[valid] += math.sqrt(2.0) * hk * table[idx[valid]]
        table = finer

    g = highpass_filter(h)
    psi = np.zeros(size)
    scale = 1 << depth
    for k, gk in enumerate(g):
        idx = 2 * np.arange(size) - k * scale
        valid = (idx >= 0) & (idx < size)
        psi[valid] += math.sqrt(2.0) * gk * table[idx[valid]]
    return table, psi


def _antiderivative(table: np.ndarray, depth: int) -> np.ndarray:
    """Cumulative trapezoid integral of a table sampled at spacing 2^-depth."""
    step = 1.0 / (1 << depth)
    out = np.zeros_like(table)
    out[1:] = np.cumsum(0.5 * (table[1:] + table[:-1])) * step
    return out


@dataclass(frozen=True, eq=False)
class WaveletBasis:
    """
    Tensor-product orthonormal wavelet basis of L²(R²).

    phi_{n,x}(y) = 2^n phi(2^n(y - x)) with x in 2^{-n} Z², and the three
    wavelets psi1 = phi⊗psi, psi2 = psi⊗phi, psi3 = psi⊗psi at every level.
    The 1-D functions are supported on [0, L-1] and tabulated at depth J.

    Supports:
    - Pointwise evaluation of phi, psi and their antiderivatives
    - Exact integer-translate Gram sequences from the filter
    - Regularity and vanishing-moment bookkeeping
    """
    family: str
    order: int
    h: np.ndarray
    g: np.ndarray
    depth: int
    phi_table: np.ndarray
    psi_table: np.ndarray
    phi_integral: np.ndarray
    psi_integral: np.ndarray
    holder: float

    @property
    def length(self) -> int:
        return len(self.h)

    @property
    def support(self) -> float:
        """Support length L-1 of phi and psi."""
        return float(self.length - 1)

    @property
    def regularity(self) -> int:
        """r: the largest integer below the Hölder exponent (0 for Haar)."""
        return int(math.floor(self.holder))

    @property
    def vanishing_moments(self) -> int:
        return self.order

    @property
    def support_radius(self) -> float:
        """Radius of the ball around the support center containing supp phi⊗phi."""
        return self.support * math.sqrt(2.0) / 2.0

    def _lookup(self, table: np.ndarray, t: np.ndarray) -> np.ndarray:
        pos = np.asarray(t, dtype=float) * (1 << self.depth)
        return np.interp(pos, np.arange(len(table)), table, left=0.0, right=table[-1])

    def phi(self, t: np.ndarray) -> np.ndarray:
        return self._lookup(self.phi_table, t)

    def psi(self, t: np.ndarray) -> np.ndarray:
        return self._lookup(self.psi_table, t)

    def phi_antiderivative(self, t: np.ndarray) -> np.ndarray:
        """∫_{-inf}^t phi, equal to 1 beyond the support."""
        return self._lookup(self.phi_integral, t)

    def psi_antiderivative(self, t: np.ndarray) -> np.ndarray:
        """∫_{-inf}^t psi, equal to 0 beyond the support."""
        return self._lookup(self.psi_integral, t)

    def function(self, kind: str):
        return self.phi if kind == "phi" else self.psi

    def antiderivative(self, kind: str):
        return self.phi_antiderivative if kind == "phi" else self.psi_antiderivative

    def sup_phi(self) -> float:
        return float(np.max(np.abs(self.phi_table)))

    def sup_psi(self) -> float:
        return float(np.max(np.abs(self.psi_table)))

    def psi_l1(self) -> float:
        """||psi⊗phi||_{L¹}, the largest L¹ norm among the three 2-D wavelets' factors."""
        step = 1.0 / (1 << self.depth)
        l1_phi = float(np.sum(np.abs(self.phi_table)) * step)
        l1_psi = float(np.sum(np.abs(self.psi_table)) * step)
        return max(l1_phi * l1_psi, l1_psi * l1_psi)

    def translate_gram(self) -> np.ndarray:
        """
        a(k) = <phi, phi(· - k)> for k = -(L-2)..L-2, exactly from the filter.

        a solves a(k) = Σ_{n,m} h_n h_m a(2k + m - n) with Σ_k a(k) = 1;
        orthonormality of the translates means a = delta.
        """
        length = self.length
        span = length - 2
        size = 2 * span + 1
        if size <= 1:
            return np.ones(1)
        t = np.zeros((size, size))
        for k in range(-span, span + 1):
            for n in range(length):
                for m in range(length):
                    j = 2 * k + m - n
                    if -span <= j <= span:
                        t[k + span, j + span] += self.h[n] * self.h[m]
        values, vectors = np.linalg.eig(t)
        best = int(np.argmin(np.abs(values - 1.0)))
        a = np.real(vectors[:, best])
        return a / a.sum()

    def cross_gram(self, kind1: str, kind2: str, shifts: np.ndarray) -> np.ndarray:
        """
        <f1(· - k), f2> for f1, f2 in {phi, psi}, exactly from the filters.

        Uses f(x) = √2 Σ_m c_m phi(2x - m) for both and the translate Gram a.
        """
        a = self.translate_gram()
        span = (len(a) - 1) // 2
        c1 = self.h if kind1 == "phi" else self.g
        c2 = self.h if kind2 == "phi" else self.g
        out = np.zeros(len(shifts))
        for idx, k in enumerate(shifts):
            total = 0.0
            for n, cn in enumerate(c1):
                for m, cm in enumerate(c2):
                    j = 2 * int(k) + n - m
                    if -span <= j <= span:
                        total += cn * cm * a[j + span]
            out[idx] = total
        return out


def build_wavelet_basis(
    family: str = "daubechies",
    order: Optional[int] = None,
    alpha: Optional[float] = None,
    depth: Optional[int] = None,
) -> WaveletBasis:
    """
    Construct a tabulated wavelet basis.

    Args:
        family: "haar" (debug) or "daubechies"
        order: Number of vanishing moments (default WAVELET_ORDER; ignored for haar)
        alpha: Target Besov exponent; checked against the regularity when given
        depth: Cascade depth (default CASCADE_DEPTH, at least 12)

    Returns:
        WaveletBasis

    Raises:
        InsufficientRegularity: if r < r_alpha = -floor(alpha)
    """
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}, expected one of {FAMILIES}")
    order = 1 if family == "haar" else (order or config.WAVELET_ORDER)
    if order not in DAUBECHIES_HOLDER:
        raise ValueError(f"order {order} outside the tabulated range 1..10")
    depth = max(depth or config.CASCADE_DEPTH, 12)
    holder = DAUBECHIES_HOLDER[order]
    if alpha is not None:
        r_alpha = -int(math.floor(alpha))
        if math.floor(holder) < r_alpha:
            raise InsufficientRegularity(
                f"{family}{order} has regularity {math.floor(holder)} < r_alpha = {r_alpha} for alpha={alpha}"
            )
    h = daubechies_filter(order)
    phi, psi = cascade_tables(h, depth)
    if len(h) == 2:
        # piecewise linear antiderivatives are tabulated exactly
        grid = np.arange(len(phi)) / (1 << depth)
        phi_integral, psi_integral = grid, np.minimum(grid, 1.0 - grid)
    else:
        phi_integral, psi_integral = _antiderivative(phi, depth), _antiderivative(psi, depth)
    basis = WaveletBasis(
        family=family,
        order=order,
        h=h,
        g=highpass_filter(h),
        depth=depth,
        phi_table=phi,
        psi_table=psi,
        phi_integral=phi_integral,
        psi_integral=psi_integral,
        holder=holder,
    )
    logger.info(f"Built {family}{order} basis: support {basis.support:g}, regularity {basis.regularity}, depth {depth}")
    return basis


def gram_matrix_2d(basis: WaveletBasis, window: int = 5) -> Dict[Tuple[int, int], np.ndarray]:
    """
    Level-0 Gram matrices of phi⊗phi and the three wavelets over a window x window block of translates.

    Returns:
        Mapping (type_i, type_j) -> Gram matrix of shape (window², window²),
        types 0 (scaling), 1, 2, 3 (wavelets)
    """
    kinds = {0: ("phi", "phi"), 1: ("phi", "psi"), 2: ("psi", "phi"), 3: ("psi", "psi")}
    offsets = np.arange(window)
    diff = (offsets[:, None] - offsets[None, :]).ravel()
    out = {}
    for ti, (ax1, ay1) in kinds.items():
        for tj, (ax2, ay2) in kinds.items():
            gx = basis.cross_gram(ax1, ax2, diff).reshape(window, window)
            gy = basis.cross_gram(ay1, ay2, diff).reshape(window, window)
            out[(ti, tj)] = np.kron(gx, gy)
    return out

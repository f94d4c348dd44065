"""
K-fold contour integral for the scaled 2K-point correlator.

    (1/K!) oint prod_a du_a/(2 pi) exp(-i sum u_a) Delta(u)^2 / prod_{a,l} (u_a - x_l)

Each u_a runs over the same circle |u| = R enclosing every x_l.  The
integrand is analytic in the annulus outside the poles, so the equal-node
trapezoidal rule on the circle converges geometrically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analytic import ScalingPoint
from .errors import DomainError, PoleError

MAX_TUPLES = 2**26
MAX_K = 4


@dataclass(frozen=True)
class ContourSpec:
    k: int
    radius: float
    nodes: int = 64

    def __post_init__(self):
        if not 1 <= self.k <= MAX_K:
            raise DomainError(f"k must be in [1, {MAX_K}], got {self.k}")
        if not self.radius > 0:
            raise DomainError("radius must be positive")
        if self.nodes < 64 or self.nodes & (self.nodes - 1):
            raise DomainError(f"nodes must be a power of two >= 64, got {self.nodes}")

    @classmethod
    def for_point(cls, sp: ScalingPoint, nodes: int | None = None) -> "ContourSpec":
        """Default circle for a scaling point: clear of the poles, not too large."""
        k = len(sp.offsets) // 2
        xmax = max(abs(x) for x in sp.offsets)
        radius = 1.3 * xmax + 1.0
        if nodes is None:
            # aliasing of the exp(-iu) Taylor tail needs nodes well above e*R*k
            nodes = 64
            while nodes < 4 * math.e * radius * k + 32 and nodes ** k < MAX_TUPLES // 2:
                nodes *= 2
        return cls(k, radius, nodes)


@dataclass(frozen=True)
class CorrelatorValue:
    value: float
    quadrature_err: float


def _circle_sum(offsets: np.ndarray, k: int, radius: float, nodes: int) -> complex:
    phi = 2 * math.pi * np.arange(nodes) / nodes
    u = radius * np.exp(1j * phi)
    # du/(2 pi) on the circle -> (i u / nodes) per node
    one = np.exp(-1j * u) * (1j * u / nodes) / np.prod(u[:, None] - offsets[None, :], axis=1)
    grids = np.meshgrid(*([u] * k), indexing="ij", sparse=True)
    weights = np.meshgrid(*([one] * k), indexing="ij", sparse=True)
    integrand = weights[0]
    for w in weights[1:]:
        integrand = integrand * w
    for a in range(k):
        for b in range(a + 1, k):
            d = grids[a] - grids[b]
            integrand = integrand * (d * d)
    # numpy's sum is pairwise, fixed order
    return complex(np.sum(integrand)) / math.factorial(k)


def eval_f2k_scaled(sp: ScalingPoint, cs: ContourSpec | None = None) -> CorrelatorValue:
    """Universal factor of the 2K-point correlator at scaled offsets ``sp``.

    The error estimate compares radius R with 2R.
    """
    cs = cs or ContourSpec.for_point(sp)
    offsets = np.asarray(sp.offsets, dtype=float)
    if offsets.size != 2 * cs.k:
        raise DomainError(f"need {2 * cs.k} offsets for k={cs.k}, got {offsets.size}")
    if cs.nodes ** cs.k > MAX_TUPLES:
        raise DomainError(f"nodes^k = {cs.nodes ** cs.k} exceeds the 2^26 cost cap")
    xmax = float(np.max(np.abs(offsets)))
    if cs.radius <= xmax:
        raise DomainError("contour radius must exceed every |x_l|")
    if np.any(np.abs(np.abs(offsets) - cs.radius) < 1e-9):
        raise PoleError("a pole sits on the integration contour")
    v1 = _circle_sum(offsets, cs.k, cs.radius, cs.nodes)
    nodes2 = cs.nodes * 2 if (cs.nodes * 2) ** cs.k <= MAX_TUPLES else cs.nodes
    v2 = _circle_sum(offsets, cs.k, 2 * cs.radius, nodes2)
    err = abs(v1 - v2) + abs(v1.imag)
    return CorrelatorValue(v1.real, err)


def eval_coincident(k: int, nodes: int = 64) -> CorrelatorValue:
    """All offsets at zero: the contour form of gamma_K."""
    if not 1 <= k <= MAX_K:
        raise DomainError(f"k must be in [1, {MAX_K}], got {k}")
    sp = ScalingPoint(0.0, (0.0,) * (2 * k))
    return eval_f2k_scaled(sp, ContourSpec(k, 1.0, nodes))


def residue_k1(x1: float, x2: float) -> float:
    """k = 1 integral by residues: i [e^{-i x1}/(x1-x2) + e^{-i x2}/(x2-x1)]."""
    if x1 == x2:
        # double pole: i d/du e^{-iu} = e^{-iu}
        return math.cos(x1)
    val = 1j * (np.exp(-1j * x1) - np.exp(-1j * x2)) / (x1 - x2)
    return float(val.real)


def two_point_k2_closed_form(x: float) -> float:
    """(1 / 2x^2) (1 - sin^2 x / x^2), without the 1/2! prefactor."""
    if x == 0:
        raise DomainError("closed form needs x != 0; the limit is 1/6")
    if abs(x) < 1e-3:
        # (1 - sin^2 x / x^2) / 2x^2 = sum_j (-1)^j 2^(2j+2) x^(2j) / (2j+4)!
        x2 = x * x
        total = 0.0
        term_pow = 1.0
        for j in range(6):
            total += (-1) ** j * 2 ** (2 * j + 2) / math.factorial(2 * j + 4) * term_pow
            term_pow *= x2
        return total
    s = math.sin(x) / x
    return (1.0 - s * s) / (2 * x * x)

"""
Closed-form large-N predictions.

Everything is expressed against one normalised log-characteristic
polynomial

    L(lam) = log|det(lam - X)| - (N/2) V(lam) + (N/2) ell_V

(ell_V = 1 for the Gaussian potential) and the normalised moment
<exp(2 k L)>, so that moment, log-moment and two-point predictions are
mutually consistent.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .errors import AccuracyError, DomainError, PoleError
from .specialfn import (
    EULER_GAMMA,
    EvalAccuracy,
    hurwitz_zeta,
    hurwitz_zeta_ds,
    ln_gamma,
)

ZETA2 = math.pi**2 / 6


class GammaMethod(enum.Enum):
    INTEGER_PRODUCT = "integer_product"
    REGULATED_INTEGRAL = "regulated_integral"
    HURWITZ_LIMIT = "hurwitz_limit"
    SMALL_K_EXPANSION = "small_k_expansion"


@dataclass(frozen=True)
class GammaKResult:
    k: float
    log_value: float
    method: GammaMethod
    err_estimate: float

    @property
    def value(self) -> float:
        return math.exp(self.log_value)


class PredictionKind(enum.Enum):
    MOMENT = "moment"
    LOG_MOMENT_EVEN = "log_moment_even"
    LOG_MOMENT_ODD = "log_moment_odd"
    TWO_POINT_MOMENT = "two_point_moment"
    TWO_POINT_LOG_MOMENT = "two_point_log_moment"
    LOG_DIFFERENCE_MOMENT = "log_difference_moment"
    SINE_KERNEL = "sine_kernel"
    G2_CONNECTED = "g2_connected"


@dataclass(frozen=True)
class Prediction:
    value: float
    kind: PredictionKind
    inputs: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ScalingPoint:
    """Centre energy plus scaled offsets x_a = 2 pi N rho (lam_a - lam)."""

    lambda_center: float
    offsets: tuple[float, ...]
    n: int = 1

    def __post_init__(self):
        object.__setattr__(self, "offsets", tuple(float(x) for x in self.offsets))
        if abs(self.lambda_center) >= 2:
            raise DomainError(f"|lambda_center| must be < 2, got {self.lambda_center}")
        if self.n < 1:
            raise DomainError(f"n must be >= 1, got {self.n}")
        scale = max(1.0, max((abs(x) for x in self.offsets), default=0.0))
        if abs(math.fsum(self.offsets)) > 1e-12 * scale * len(self.offsets):
            raise DomainError("scaled offsets must sum to zero")

    @classmethod
    def from_energies(cls, energies, n: int) -> "ScalingPoint":
        lam = float(np.mean(energies))
        dens = 2 * math.pi * n * semicircle_density(lam)
        offs = [dens * (e - lam) for e in energies]
        # remove rounding drift so the zero-sum invariant holds exactly enough
        drift = math.fsum(offs) / len(offs)
        return cls(lam, tuple(x - drift for x in offs), n)


# ---------------------------------------------------------------------------
# densities
# ---------------------------------------------------------------------------

def semicircle_density(lam):
    """rho(lam) = sqrt(4 - lam^2) / (2 pi) on [-2, 2], zero outside."""
    la = np.asarray(lam, dtype=float)
    out = np.sqrt(np.clip(4.0 - la * la, 0.0, None)) / (2 * math.pi)
    return float(out) if np.ndim(lam) == 0 else out


def quartic_band_edge(g: float) -> float:
    """Edge b of the one-cut support [-b, b] for V(x) = x^2/2 + g x^4, g >= 0."""
    if g < 0:
        raise DomainError("quartic coupling must be >= 0")
    if g == 0:
        return 2.0
    # 12 g a^4 + a^2 - 1 = 0, b = 2a
    a2 = (-1.0 + math.sqrt(1.0 + 48.0 * g)) / (24.0 * g)
    return 2.0 * math.sqrt(a2)


def equilibrium_density(lam, g: float = 0.0):
    """Large-N eigenvalue density for V(x) = x^2/2 + g x^4."""
    b = quartic_band_edge(g)
    a2 = b * b / 4
    la = np.asarray(lam, dtype=float)
    root = np.sqrt(np.clip(b * b - la * la, 0.0, None))
    out = (1.0 + 8.0 * g * a2 + 4.0 * g * la * la) * root / (2 * math.pi)
    return float(out) if np.ndim(lam) == 0 else out


def log_potential_constant(g: float = 0.0) -> float:
    """ell_V = V(x) - 2 int rho(y) log|x - y| dy, constant on the support.

    Equals 1 for the Gaussian potential; evaluated at x = 0 for g > 0.
    """
    if g == 0:
        return 1.0
    b = quartic_band_edge(g)
    val, _ = integrate.quad(lambda y: equilibrium_density(y, g) * math.log(y), 0.0, b,
                            epsabs=1e-13, limit=200)
    return -4.0 * val


def potential(x, g: float = 0.0):
    x = np.asarray(x, dtype=float)
    return 0.5 * x * x + g * x**4


# ---------------------------------------------------------------------------
# gamma_K
# ---------------------------------------------------------------------------

def gamma_k_integer(k: int) -> GammaKResult:
    """gamma_K = prod_{l<K} l!/(K+l)! as an exact log-space product."""
    if int(k) != k or not 1 <= k <= 20:
        raise DomainError(f"gamma_k_integer needs integer 1 <= k <= 20, got {k}")
    k = int(k)
    logv = math.fsum(math.lgamma(l + 1) - math.lgamma(k + l + 1) for l in range(k))
    return GammaKResult(k, logv, GammaMethod.INTEGER_PRODUCT, 1e-14 * max(1.0, abs(logv)))


def _gamma_integrand(t, k):
    if t < 1e-6:
        # removable point at t = 0; first-order Taylor expansion
        return k * k * (1 - k) + 7 * k * k * (k - 1) * (k + 1) * t / 12
    ratio = math.expm1(-k * t) / math.expm1(-t)
    return -math.exp(-t) / t * (k * k - ratio * ratio)


def log_gamma_k_integral(k: float, acc: EvalAccuracy | None = None) -> GammaKResult:
    """log gamma_K from its one-dimensional integral representation."""
    acc = acc or EvalAccuracy(abs_tol=1e-10)
    if not 0 < k <= 10:
        raise DomainError(f"log_gamma_k_integral needs 0 < k <= 10, got {k}")
    # e^-t < 1e-18 beyond t = 18 ln 10
    t_max = 18 * math.log(10)
    with warnings.catch_warnings():
        # roundoff warnings are surfaced through the error check below
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(_gamma_integrand, 0.0, t_max, args=(k,),
                                  epsabs=acc.abs_tol / 10, epsrel=0.0,
                                  limit=max(50, min(acc.max_terms, 2000)))
    if err > acc.abs_tol:
        raise AccuracyError(f"quadrature error {err:.3g} exceeds {acc.abs_tol:g} at k={k}")
    return GammaKResult(k, val, GammaMethod.REGULATED_INTEGRAL, err)


def _hurwitz_bracket(k: float):
    """Value and alpha-derivative at alpha = 1 of the regulated bracket

    K^2 - zeta(-a) + 2 zeta(-a, K+1) - 2K zeta(1-a, K+1)
        - zeta(-a, 2K+1) + 2K zeta(1-a, 2K+1).
    """
    k1, k2 = k + 1.0, 2 * k + 1.0
    b0 = (k * k - hurwitz_zeta(-1, 1) + 2 * hurwitz_zeta(-1, k1)
          - 2 * k * hurwitz_zeta(0, k1) - hurwitz_zeta(-1, k2)
          + 2 * k * hurwitz_zeta(0, k2))
    b1 = (hurwitz_zeta_ds(-1, 1) - 2 * hurwitz_zeta_ds(-1, k1)
          + 2 * k * hurwitz_zeta_ds(0, k1) + hurwitz_zeta_ds(-1, k2)
          - 2 * k * hurwitz_zeta_ds(0, k2))
    return b0, b1


def log_gamma_k_hurwitz(k: float) -> GammaKResult:
    """log gamma_K as the alpha -> 1 limit of the Hurwitz-zeta form.

    With Gamma(1 - alpha) = -1/(alpha - 1) - c + O(alpha - 1) and the
    bracket B(alpha) = B0 + (alpha - 1) B1, the limit is B0/(alpha-1) +
    c B0 + B1; B0 must vanish.
    """
    if not 0 < k <= 10:
        raise DomainError(f"log_gamma_k_hurwitz needs 0 < k <= 10, got {k}")
    b0, b1 = _hurwitz_bracket(float(k))
    if abs(b0) > 1e-7:
        raise PoleError(f"pole coefficient {b0:.3g} did not cancel at k={k}")
    return GammaKResult(k, b1 + EULER_GAMMA * b0, GammaMethod.HURWITZ_LIMIT,
                        1e-8 * (1 + 4 * k) + abs(b0))


def gamma_k_small_k(k: float) -> GammaKResult:
    """Leading small-K behaviour log gamma_K ~ K^2 (1 + c).

    The first neglected term is -2 zeta(2) K^3, used as the error estimate.
    """
    if abs(k) > 0.3:
        raise DomainError(f"small-K expansion used outside |k| <= 0.3: {k}")
    return GammaKResult(k, k * k * (1 + EULER_GAMMA), GammaMethod.SMALL_K_EXPANSION,
                        2 * ZETA2 * abs(k) ** 3)


def log_gamma_k(k: float) -> float:
    """log gamma_K for any 0 <= k <= 10 through the best available route."""
    if k == 0:
        return 0.0
    if float(k).is_integer() and 1 <= k <= 20:
        return gamma_k_integer(int(k)).log_value
    return log_gamma_k_integral(k, EvalAccuracy(abs_tol=1e-12)).log_value


def gamma_k_bounds(k: float) -> tuple[float, float]:
    """Conjectured bracket 1/Gamma(K^2+1) <= gamma_K <= 2/(Gamma(K^2+2)(2-K))."""
    if not 0 <= k <= 1:
        raise DomainError(f"bounds only stated for 0 <= k <= 1, got {k}")
    k2 = k * k
    lower = math.exp(-ln_gamma(k2 + 1))
    upper = 2.0 * math.exp(-ln_gamma(k2 + 2)) / (2.0 - k)
    return lower, upper


# ---------------------------------------------------------------------------
# moment predictions
# ---------------------------------------------------------------------------

def _log_density_scale(n: int, lam: float) -> float:
    if abs(lam) >= 2:
        raise DomainError(f"lambda must lie inside (-2, 2), got {lam}")
    return math.log(2 * math.pi * n * semicircle_density(lam))


def predict_normalized_moment(n: int, lam: float, k: float) -> Prediction:
    """<exp(2k L(lam))> ~ (2 pi N rho)^(k^2) gamma_K."""
    if n < 1 or k < 0:
        raise DomainError("need n >= 1 and k >= 0")
    logv = k * k * _log_density_scale(n, lam) + log_gamma_k(k)
    return Prediction(math.exp(logv), PredictionKind.MOMENT, {"n": n, "lambda": lam, "k": k})


def predict_sine_kernel(n: int, lambda1: float, lambda2: float) -> Prediction:
    lam = 0.5 * (lambda1 + lambda2)
    dens = math.exp(_log_density_scale(n, lam))
    x = 0.5 * dens * (lambda1 - lambda2)
    sinc = 1.0 if x == 0 else math.sin(x) / x
    return Prediction(dens * sinc, PredictionKind.SINE_KERNEL,
                      {"n": n, "lambda1": lambda1, "lambda2": lambda2, "x": x})


def gaussian_moment_coefficient(m: int) -> float:
    """(2m)! / (2^(2m) m!) = E[Y^(2m)] for Y ~ N(0, 1/2) scaled by s^m."""
    return math.exp(math.lgamma(2 * m + 1) - math.lgamma(m + 1) - 2 * m * math.log(2))


def predict_log_moment(n: int, lam: float, order: int) -> Prediction:
    """<L^order>: zero for odd order, (2m)!/(2^2m m!) log(2 pi N rho)^m for order 2m."""
    if order < 0:
        raise DomainError("order must be >= 0")
    inputs = {"n": n, "lambda": lam, "order": order}
    if order % 2:
        return Prediction(0.0, PredictionKind.LOG_MOMENT_ODD, inputs)
    m = order // 2
    return Prediction(gaussian_moment_coefficient(m) * _log_density_scale(n, lam) ** m,
                      PredictionKind.LOG_MOMENT_EVEN, inputs)


def zeta_log_moment_prediction(t_height: float, order: int) -> float:
    """Same Gaussian coefficients with log(2 pi N rho) replaced by log log T."""
    if order % 2:
        return 0.0
    m = order // 2
    return gaussian_moment_coefficient(m) * math.log(math.log(t_height)) ** m


def _check_large_x(x: float):
    if x <= 0:
        raise DomainError(f"x must be positive, got {x}")
    if x < 3:
        raise DomainError(f"large-x formula used at x = {x} < 3")
    if x < 10:
        warnings.warn(f"large-x asymptotics at x = {x} < 10 are rough", RuntimeWarning,
                      stacklevel=3)


def predict_two_point_moment(l1: int, l2: int, x: float, n: int, lam: float) -> Prediction:
    """Leading large-x value (2 pi N rho)^((l1+l2)^2) / x^((l1+l2)^2 / 2)."""
    _check_large_x(x)
    e = (l1 + l2) ** 2
    logv = e * _log_density_scale(n, lam) - 0.5 * e * math.log(x)
    return Prediction(math.exp(logv), PredictionKind.TWO_POINT_MOMENT,
                      {"l1": l1, "l2": l2, "x": x, "n": n, "lambda": lam})


def predict_two_point_log_moment(p1: int, p2: int, x: float, n: int, lam: float) -> Prediction:
    """<L1^p1 L2^p2> = (1/2)^(2p) (2p)!/p! log(2 pi N rho / sqrt(2x))^p, p = (p1+p2)/2."""
    _check_large_x(x)
    inputs = {"p1": p1, "p2": p2, "x": x, "n": n, "lambda": lam}
    if (p1 + p2) % 2:
        return Prediction(0.0, PredictionKind.TWO_POINT_LOG_MOMENT, inputs)
    p = (p1 + p2) // 2
    scale = _log_density_scale(n, lam) - 0.5 * math.log(2 * x)
    return Prediction(gaussian_moment_coefficient(p) * scale**p,
                      PredictionKind.TWO_POINT_LOG_MOMENT, inputs)


def predict_log_difference_moment(p: int, x: float, n: int, lam: float) -> Prediction:
    """<(L1 - L2)^(2p)> from the binomial expansion of the two-point log moments."""
    if p < 1:
        raise DomainError("p must be >= 1")
    _check_large_x(x)
    c = 2 * gaussian_moment_coefficient(p)
    a = _log_density_scale(n, lam)
    b = a - 0.5 * math.log(2 * x)
    return Prediction(c * (a**p - b**p), PredictionKind.LOG_DIFFERENCE_MOMENT,
                      {"p": p, "x": x, "n": n, "lambda": lam})


# ---------------------------------------------------------------------------
# resolvents
# ---------------------------------------------------------------------------

def _cut_sqrt(z):
    # sqrt(z^2 - 4) with the cut exactly on [-2, 2] and ~ z at infinity
    return np.sqrt(z - 2.0) * np.sqrt(z + 2.0)


def _check_off_cut(z):
    za = np.asarray(z, dtype=complex)
    on_cut = (za.imag == 0) & (np.abs(za.real) <= 2)
    if np.any(on_cut):
        raise PoleError("resolvent evaluated on the branch cut [-2, 2]")
    return za


def green_function(z):
    """G(z) = (z - sqrt(z^2 - 4)) / 2, written as 2 / (z + sqrt(z^2 - 4))."""
    za = _check_off_cut(z)
    out = 2.0 / (za + _cut_sqrt(za))
    return complex(out) if np.ndim(z) == 0 else out


def u_map(z):
    """u(z) = (z + sqrt(z^2 - 4)) / 2 on the same branch as green_function."""
    za = _check_off_cut(z)
    out = 0.5 * (za + _cut_sqrt(za))
    return complex(out) if np.ndim(z) == 0 else out


def g2_connected(z1, z2):
    """N^2 G_2c(z1, z2) for the Gaussian ensemble.

    (1 / (2 (z1 - z2)^2)) [ (z1 z2 - 4) / (s(z1) s(z2)) - 1 ],
    s(z) = sqrt(z^2 - 4) on the green_function branch.
    """
    a = _check_off_cut(z1)
    b = _check_off_cut(z2)
    if np.any(a == b):
        raise PoleError("g2_connected is singular at coincident points")
    d = a - b
    out = ((a * b - 4.0) / (_cut_sqrt(a) * _cut_sqrt(b)) - 1.0) / (2.0 * d * d)
    return complex(out) if np.ndim(out) == 0 else out


def smoothed_rho2c(lambda1: float, lambda2: float, n: int) -> float:
    """Oscillation-averaged connected density near coincidence: -1/(2 pi^2 N^2 d^2)."""
    d = lambda1 - lambda2
    if d == 0:
        raise PoleError("smoothed_rho2c is singular at coincident points")
    if abs(lambda1) >= 2 or abs(lambda2) >= 2:
        raise DomainError("both energies must lie inside (-2, 2)")
    return -1.0 / (2 * math.pi**2 * n * n * d * d)


def rho2c_from_g2(lambda1: float, lambda2: float, n: int, eps: float = 1e-4) -> float:
    """Connected density from the four boundary values of G_2c at +- i eps."""
    z1p, z1m = lambda1 + 1j * eps, lambda1 - 1j * eps
    z2p, z2m = lambda2 + 1j * eps, lambda2 - 1j * eps
    bracket = (g2_connected(z1p, z2p) + g2_connected(z1m, z2m)
               - g2_connected(z1p, z2m) - g2_connected(z1m, z2p))
    return float((-bracket / (4 * math.pi**2)).real) / (n * n)

"""
Special-function kernel.

Log-gamma (real and complex), Hurwitz zeta and its s-derivative, Bernoulli
numbers, the Riemann-Siegel theta function and zeta(1/2 + it).

Everything here is double precision and pure; functions that take ``t``
arrays are vectorised with numpy, the Hurwitz routines are scalar.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import AccuracyError, DomainError, PoleError

EULER_GAMMA = 0.5772156649015329
ZETA_PRIME_MINUS_ONE = -0.16542114370045092
LOG_2PI = math.log(2.0 * math.pi)
LOG_PI = math.log(math.pi)

# Euler-Maclaurin (Hurwitz) and Stirling tails both stop at B_30.
_EM_ORDER = 15
_STIRLING_SHIFT = 15.0
_STIRLING_TERMS = 12
# Critical-line evaluation switches from Euler-Maclaurin to Riemann-Siegel here.
T_SWITCH = 50.0


@dataclass(frozen=True)
class EvalAccuracy:
    abs_tol: float = 1e-6
    max_terms: int = 100_000

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise DomainError(f"abs_tol must be > 0, got {self.abs_tol}")
        if self.max_terms < 1:
            raise DomainError(f"max_terms must be >= 1, got {self.max_terms}")


@dataclass(frozen=True)
class CriticalLineValue:
    """zeta(1/2 + it) together with Z(t) and theta(t).

    ``z_value`` is real and ``zeta_re + 1j*zeta_im == exp(-1j*theta) * z_value``.
    """

    t: float
    z_value: float
    theta: float
    zeta_re: float
    zeta_im: float

    @property
    def zeta(self) -> complex:
        return complex(self.zeta_re, self.zeta_im)


# ---------------------------------------------------------------------------
# Bernoulli numbers
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _bernoulli_table(nmax: int = 60) -> tuple[Fraction, ...]:
    # B_m = -1/(m+1) * sum_{k<m} C(m+1, k) B_k, with B_1 = -1/2
    b = [Fraction(1)]
    for m in range(1, nmax + 1):
        acc = Fraction(0)
        binom = 1
        for k in range(m):
            acc += binom * b[k]
            binom = binom * (m + 1 - k) // (k + 1)
        b.append(-acc / (m + 1))
    return tuple(b)


def bernoulli_fraction(n: int) -> Fraction:
    """Exact B_n as a Fraction (B_1 = -1/2 convention)."""
    if n < 0 or n > 60:
        raise DomainError(f"bernoulli index must be in [0, 60], got {n}")
    return _bernoulli_table()[n]


def bernoulli(n: int) -> float:
    """Bernoulli number B_n for even 0 <= n <= 60 (and n = 1)."""
    if n % 2 == 1 and n > 1:
        raise DomainError(f"B_n vanishes for odd n > 1; refusing n = {n}")
    return float(bernoulli_fraction(n))


_B2K = np.array([float(bernoulli_fraction(2 * k)) for k in range(1, 31)])


# ---------------------------------------------------------------------------
# log-gamma
# ---------------------------------------------------------------------------

def _stirling_tail(z):
    # sum_k B_2k / (2k (2k-1) z^(2k-1)), Horner in 1/z^2
    w = 1.0 / (z * z)
    acc = 0.0
    for k in range(_STIRLING_TERMS, 0, -1):
        acc = acc * w + _B2K[k - 1] / (2 * k * (2 * k - 1))
    return acc / z


def ln_gamma(x):
    """ln Gamma(x) for real x > 0 (scalar or array)."""
    xa = np.asarray(x, dtype=float)
    if np.any(~(xa > 0)):
        raise DomainError("ln_gamma requires x > 0")
    shift = np.where(xa < _STIRLING_SHIFT, np.ceil(_STIRLING_SHIFT - xa), 0.0)
    y = xa + shift
    out = (y - 0.5) * np.log(y) - y + 0.5 * LOG_2PI + _stirling_tail(y)
    nmax = int(shift.max()) if shift.size else 0
    for j in range(nmax):
        out = out - np.where(j < shift, np.log(xa + j), 0.0)
    return float(out) if np.ndim(x) == 0 else out


def ln_gamma_complex(z):
    """Principal-branch log-gamma for Re z > 0.

    Built as Stirling at z + n minus a sum of principal logs, so the
    imaginary part is continuous along vertical lines (it is *not*
    reduced mod 2*pi).
    """
    za = np.asarray(z, dtype=complex)
    if np.any(~(za.real > 0)):
        raise DomainError("ln_gamma_complex requires Re z > 0")
    shift = np.where(np.abs(za) < _STIRLING_SHIFT,
                     np.ceil(_STIRLING_SHIFT - za.real), 0.0)
    shift = np.maximum(shift, 0.0)
    y = za + shift
    out = (y - 0.5) * np.log(y) - y + 0.5 * LOG_2PI + _stirling_tail(y)
    nmax = int(shift.max()) if shift.size else 0
    for j in range(nmax):
        out = out - np.where(j < shift, np.log(za + j), 0.0)
    return complex(out) if np.ndim(z) == 0 else out


# ---------------------------------------------------------------------------
# Hurwitz zeta
# ---------------------------------------------------------------------------

def euler_gamma() -> float:
    return EULER_GAMMA


def hurwitz_zeta(s: float, a: float) -> float:
    """zeta(s, a) = sum_{n>=0} (a+n)^-s, analytically continued in s.

    Direct sum of the first n0 terms plus an Euler-Maclaurin tail through
    B_30. For s a non-positive integer the tail terminates and the result is
    exact up to rounding.
    """
    s = float(s)
    a = float(a)
    if s == 1.0:
        raise PoleError("hurwitz_zeta has a pole at s = 1")
    if not a > 0:
        raise DomainError(f"hurwitz_zeta requires a > 0, got {a}")
    # for s < 0 a longer head only adds cancellation; the tail still converges
    n0 = max(math.ceil(abs(s)) + 10 if s > 0 else 0, math.ceil(a) + 10)
    head = math.fsum((a + n) ** (-s) for n in range(n0))
    x = a + n0
    terms = [x ** (1.0 - s) / (s - 1.0), 0.5 * x ** (-s)]
    # rising factorial (s)_{2k-1} built incrementally
    poch = s
    fact = 2.0  # (2k)!
    xpow = x ** (-s - 1.0)
    for k in range(1, _EM_ORDER + 1):
        term = _B2K[k - 1] / fact * poch * xpow
        terms.append(term)
        if poch == 0.0:
            break
        poch *= (s + 2 * k - 1) * (s + 2 * k)
        fact *= (2 * k + 1) * (2 * k + 2)
        xpow /= x * x
    return head + math.fsum(terms)


def hurwitz_zeta_ds(s: float, a: float, h: float = 1e-3) -> float:
    """Partial derivative d/ds zeta(s, a).

    Central differences at steps h and h/2 combined by one Richardson step,
    which cancels the O(h^2) error term.
    """
    if s == 1.0:
        raise PoleError("hurwitz_zeta_ds has a pole at s = 1")
    if abs(s - 1.0) <= 2 * h:
        raise PoleError(f"finite-difference stencil around s = {s} straddles the pole")

    def central(step):
        return (hurwitz_zeta(s + step, a) - hurwitz_zeta(s - step, a)) / (2 * step)

    return (4.0 * central(h / 2) - central(h)) / 3.0


# ---------------------------------------------------------------------------
# theta, Z and zeta on the critical line
# ---------------------------------------------------------------------------

def riemann_siegel_theta(t):
    """theta(t) = Im ln Gamma(1/4 + it/2) - (t/2) ln pi, odd and continuous."""
    ta = np.asarray(t, dtype=float)
    out = np.imag(ln_gamma_complex(0.25 + 0.5j * ta)) - 0.5 * ta * LOG_PI
    return float(out) if np.ndim(t) == 0 else out


def riemann_siegel_theta_asymptotic(t):
    """Large-t series for theta; independent of the log-gamma route."""
    ta = np.asarray(t, dtype=float)
    w = 1.0 / (ta * ta)
    corr = (1.0 / 48 + w * (7.0 / 5760 + w * (31.0 / 80640 + w * (127.0 / 430080
            + w * 511.0 / 1216512)))) / ta
    out = 0.5 * ta * np.log(ta / (2 * math.pi)) - 0.5 * ta - math.pi / 8 + corr
    return float(out) if np.ndim(t) == 0 else out


def zeta_euler_maclaurin(s: complex, n_terms: int | None = None,
                         max_terms: int = 10**7) -> complex:
    """Riemann zeta at complex s != 1 by Euler-Maclaurin summation.

    The default head length ~ |Im s| + 20 keeps the B_30 tail far below
    double precision for the |s| this package uses.
    """
    s = complex(s)
    if s == 1:
        raise PoleError("zeta has a pole at s = 1")
    if n_terms is None:
        n_terms = int(abs(s.imag) + abs(s.real) + 20)
    if n_terms > max_terms:
        raise AccuracyError(f"Euler-Maclaurin needs {n_terms} terms > cap {max_terms}")
    n = np.arange(1, n_terms, dtype=float)
    head = np.sum(np.exp(-s * np.log(n)))
    x = float(n_terms)
    tail = x ** (1 - s) / (s - 1) + 0.5 * x ** (-s)
    poch = s
    fact = 2.0
    xpow = x ** (-s - 1)
    for k in range(1, _EM_ORDER + 1):
        tail += _B2K[k - 1] / fact * poch * xpow
        poch *= (s + 2 * k - 1) * (s + 2 * k)
        fact *= (2 * k + 1) * (2 * k + 2)
        xpow /= x * x
    return complex(head + tail)


def _psi(p):
    return np.cos(2 * np.pi * (p * p - p - 1.0 / 16)) / np.cos(2 * np.pi * p)


@lru_cache(maxsize=1)
def _rs_correction_polys(order: int = 48) -> tuple[np.ndarray, ...]:
    """Taylor coefficients (in z = p - 1/2) of the Riemann-Siegel C_0..C_4.

    Psi is entire and even about p = 1/2; its Taylor coefficients come from a
    trapezoidal Cauchy integral on a circle of radius 1 around p = 1/2.
    """
    m = 256
    phi = 2 * np.pi * np.arange(m) / m
    r = 1.0
    vals = _psi(0.5 + r * np.exp(1j * phi))
    coef = (np.fft.fft(vals) / m).real[: order + 13] / r ** np.arange(order + 13)
    coef[1::2] = 0.0

    def deriv(j):
        # coefficients of Psi^(j)(1/2 + z) in ascending powers of z
        n = np.arange(j, order + j + 1)
        fall = np.array([math.perm(int(k), j) for k in n], dtype=float)
        return coef[j : order + j + 1] * fall

    pi = math.pi
    c0 = deriv(0)
    c1 = -deriv(3) / (96 * pi**2)
    c2 = deriv(6) / (18432 * pi**4) + deriv(2) / (64 * pi**2)
    c3 = (-deriv(9) / (5308416 * pi**6) - deriv(5) / (3840 * pi**4)
          - deriv(1) / (64 * pi**2))
    c4 = (deriv(12) / (2038431744 * pi**8) + 11 * deriv(8) / (5898240 * pi**6)
          + 19 * deriv(4) / (24576 * pi**4) + deriv(0) / (128 * pi**2))
    # np.polyval wants descending powers
    return tuple(c[::-1].copy() for c in (c0, c1, c2, c3, c4))


def riemann_siegel_z(t, n_corrections: int = 5):
    """Z(t) by the Riemann-Siegel main sum plus C_0 .. C_{n-1} corrections.

    Vectorised over ``t``; intended for t >= T_SWITCH.  Returns ``(Z, err)``
    where ``err`` is the last included correction scaled by one more power
    of (t/2pi)^(-1/2), a proxy for the first omitted term.
    """
    ta = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(ta <= 2 * math.pi):
        raise DomainError("riemann_siegel_z needs t > 2*pi")
    tau = np.sqrt(ta / (2 * math.pi))
    m = np.floor(tau).astype(np.int64)
    p = tau - m
    theta = riemann_siegel_theta(ta)
    total = np.zeros_like(ta)
    for n in range(1, int(m.max()) + 1):
        active = m >= n
        total += np.where(active, np.cos(theta - ta * math.log(n)) / math.sqrt(n), 0.0)
    total *= 2.0
    polys = _rs_correction_polys()
    z = p - 0.5
    w = 1.0 / tau
    corr = np.zeros_like(ta)
    last = np.zeros_like(ta)
    for k in range(n_corrections):
        last = np.polyval(polys[k], z) * w**k
        corr += last
    sign = np.where((m - 1) % 2 == 0, 1.0, -1.0)
    pre = sign / np.sqrt(tau)
    out = total + pre * corr
    err = np.abs(pre * last) * w
    if np.ndim(t) == 0:
        return float(out[0]), float(err[0])
    return out, err


def critical_line_batch(t, acc: EvalAccuracy | None = None):
    """Vectorised (Z(t), theta(t)) for t >= 0.

    Euler-Maclaurin below T_SWITCH, Riemann-Siegel above.
    """
    acc = acc or EvalAccuracy()
    ta = np.asarray(t, dtype=float)
    if np.any(ta < 0):
        raise DomainError("critical-line evaluation requires t >= 0")
    theta = riemann_siegel_theta(ta)
    z = np.empty_like(ta)
    low = ta < T_SWITCH
    for i in np.flatnonzero(low):
        zeta = zeta_euler_maclaurin(complex(0.5, ta.flat[i]), max_terms=acc.max_terms)
        z.flat[i] = (np.exp(1j * theta.flat[i]) * zeta).real
    if np.any(~low):
        zr, err = riemann_siegel_z(ta[~low])
        if np.any(err > acc.abs_tol):
            worst = float(np.max(err))
            raise AccuracyError(f"Riemann-Siegel remainder {worst:.3g} exceeds abs_tol {acc.abs_tol:g}")
        z[~low] = zr
    return z, theta


def zeta_critical_line(t: float, acc: EvalAccuracy | None = None) -> CriticalLineValue:
    """zeta(1/2 + it) for t >= 0 with Z(t) and theta(t)."""
    acc = acc or EvalAccuracy()
    t = float(t)
    if t < 0:
        raise DomainError("zeta_critical_line requires t >= 0")
    theta = riemann_siegel_theta(t)
    if t < T_SWITCH:
        zeta = zeta_euler_maclaurin(complex(0.5, t), max_terms=acc.max_terms)
        z = (np.exp(1j * theta) * zeta).real
    else:
        z, err = riemann_siegel_z(t)
        if err > acc.abs_tol:
            raise AccuracyError(f"Riemann-Siegel remainder {err:.3g} exceeds abs_tol {acc.abs_tol:g}")
    zeta = np.exp(-1j * theta) * z
    return CriticalLineValue(t=t, z_value=float(z), theta=float(theta),
                             zeta_re=float(zeta.real), zeta_im=float(zeta.imag))

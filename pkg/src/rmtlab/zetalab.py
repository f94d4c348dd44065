"""
Number-theory side: the prime-product factor a_K, zeta on a grid of heights,
moment integrals of |zeta|, log|zeta| and arg zeta, and the xi prefactor.
"""

from __future__ import annotations

import hashlib
import logging
import math
import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .ensemble.config import Estimator, MomentEstimate
from .errors import DomainError, RMTLabError
from .specialfn import (EvalAccuracy, LOG_PI, critical_line_batch, ln_gamma_complex,
                        zeta_euler_maclaurin)

log = logging.getLogger(__name__)

NEAR_ZERO = 1e-12
BLOCKS = 20
BISECT_DEPTH = 20
# a same-sign parabola vertex must keep this fraction of |Z| to skip refinement
VERTEX_MARGIN = 0.5
GRID_CHUNK = 100_000
CACHE_MAGIC = b"ZGRD"
CACHE_VERSION = 1
CACHE_ENV = "RMT_CACHE_DIR"


class UnwindingError(RMTLabError, ArithmeticError):
    """arg zeta could not be followed continuously through an interval."""


# ---------------------------------------------------------------------------
# primes and a_K
# ---------------------------------------------------------------------------

def prime_sieve(limit: int) -> np.ndarray:
    """All primes <= limit, ascending (odd-only sieve of Eratosthenes)."""
    if limit < 2:
        raise DomainError("limit must be >= 2")
    limit = int(limit)
    sieve = np.ones((limit - 1) // 2, dtype=bool)  # sieve[i] <-> 2i + 3
    for i in range(int(math.isqrt(limit) - 3) // 2 + 1):
        if sieve[i]:
            p = 2 * i + 3
            sieve[(p * p - 3) // 2::p] = False
    return np.concatenate(([2], 2 * np.flatnonzero(sieve) + 3)).astype(np.int64)


@dataclass(frozen=True)
class AkResult:
    k: float
    value: float
    prime_cutoff: int
    tail_bound: float


def _log_prime_factors(k: float, primes: np.ndarray) -> np.ndarray:
    """log[(1 - 1/p)^(k^2) sum_m (k)_m^2 / m!^2 p^-m] for each prime."""
    x = 1.0 / primes.astype(float)
    term = np.ones_like(x)
    partial = np.zeros_like(x)
    m = 0
    while True:
        # (k)_{m+1}/(m+1)! = (k)_m/m! * (k+m)/(m+1)
        ratio = (k + m) / (m + 1)
        term = term * ratio * ratio * x
        partial += term
        m += 1
        if np.all(np.abs(term) < 1e-16 * (1.0 + partial)):
            break
        if m > 10_000:
            raise RMTLabError("a_K inner sum failed to converge")
    return k * k * np.log1p(-x) + np.log1p(partial)


def ak_coefficient(k: float, prime_cutoff: int) -> AkResult:
    """Arithmetic factor a_K as a product over primes p <= prime_cutoff."""
    if not k > 0:
        raise DomainError("k must be positive")
    if prime_cutoff < 100:
        raise DomainError("prime_cutoff must be >= 100")
    primes = prime_sieve(prime_cutoff)
    logs = _log_prime_factors(float(k), primes)
    total = math.fsum(logs)
    value = math.exp(total)
    # next prime, found by trial division over a short range
    q = int(primes[-1]) + 1
    while any(q % p == 0 for p in primes[: np.searchsorted(primes, math.isqrt(q), side="right")]):
        q += 1
    # log-factors decay like C/p^2 and sum_{p>P} p^-2 ~ 1/(P ln P)
    c = abs(float(_log_prime_factors(float(k), np.array([q]))[0])) * q * q
    tail_log = c / (prime_cutoff * math.log(prime_cutoff))
    return AkResult(float(k), value, int(prime_cutoff), value * math.expm1(tail_log))


# ---------------------------------------------------------------------------
# zeta on a grid
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ZetaGrid:
    """|zeta(1/2+it)| and the continuously unwound arg zeta on an equispaced grid.

    ``flagged`` lists interval indices i (between nodes i and i+1) whose
    increment could not be kept below pi, e.g. two zeros inside one step.
    """

    t0: float
    t1: float
    step: float
    abs_zeta: np.ndarray
    arg_zeta_unwound: np.ndarray
    flagged: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if not (0 <= self.t0 < self.t1 and self.step > 0):
            raise DomainError("need 0 <= t0 < t1 and step > 0")
        a = np.asarray(self.abs_zeta, dtype=float)
        g = np.asarray(self.arg_zeta_unwound, dtype=float)
        if a.shape != g.shape or a.ndim != 1:
            raise DomainError("abs and arg arrays must be 1-d and equally long")
        for arr in (a, g):
            arr.setflags(write=False)
        object.__setattr__(self, "abs_zeta", a)
        object.__setattr__(self, "arg_zeta_unwound", g)

    @property
    def t(self) -> np.ndarray:
        return self.t0 + self.step * np.arange(self.abs_zeta.size)

    def check_unwinding(self) -> bool:
        d = np.abs(np.diff(self.arg_zeta_unwound))
        ok = d < math.pi
        if self.flagged:
            ok[list(self.flagged)] = True
        return bool(np.all(ok))


def _eval_z(t: np.ndarray, acc: EvalAccuracy, workers: int) -> tuple[np.ndarray, np.ndarray]:
    parts = [t[i:i + GRID_CHUNK] for i in range(0, t.size, GRID_CHUNK)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            res = list(pool.map(lambda x: critical_line_batch(x, acc), parts))
    else:
        res = [critical_line_batch(x, acc) for x in parts]
    return np.concatenate([r[0] for r in res]), np.concatenate([r[1] for r in res])


def _anchor_arg(t0: float, acc: EvalAccuracy) -> float:
    """arg zeta(1/2 + i t0) along the path 2 -> 2 + i t0 -> 1/2 + i t0."""
    if t0 == 0.0:
        # limit from above: S(0+) = -1
        return -math.pi
    sigma = 2.0
    prev = zeta_euler_maclaurin(complex(sigma, t0), max_terms=acc.max_terms)
    # |zeta(2 + it) - 1| < zeta(2) - 1 < 1, so the principal value is the right one
    arg = math.atan2(prev.imag, prev.real)
    h = 0.02
    while sigma > 0.5:
        h = min(h, sigma - 0.5)
        for _ in range(BISECT_DEPTH):
            cur = zeta_euler_maclaurin(complex(sigma - h, t0), max_terms=acc.max_terms)
            d = math.atan2((cur / prev).imag, (cur / prev).real)
            if abs(d) < math.pi / 4:
                break
            h /= 2
        else:
            raise UnwindingError(f"horizontal path passes too close to a zero at t = {t0}")
        arg += d
        prev = cur
        sigma -= h
        h = min(2 * h, 0.02)
    return arg


def _hidden_pair(z_fn, a: float, b: float) -> int:
    """Count sign changes of Z inside [a, b] by repeated halving (depth-limited)."""
    for depth in range(1, BISECT_DEPTH + 1):
        ts = np.linspace(a, b, 2 ** depth + 1)
        zs = z_fn(ts)
        changes = int(np.count_nonzero(np.sign(zs[1:]) != np.sign(zs[:-1])))
        if changes:
            return changes
        # stop once the sampled minimum is clearly bounded away from zero
        i = int(np.argmin(np.abs(zs)))
        if 0 < i < zs.size - 1:
            y0, y1, y2 = zs[i - 1], zs[i], zs[i + 1]
            curv = y0 - 2 * y1 + y2
            vertex = y1 - (y2 - y0) ** 2 / (8 * curv) if curv != 0 else y1
            if np.sign(vertex) == np.sign(y1) and abs(vertex) > VERTEX_MARGIN * abs(y1):
                return 0
        else:
            return 0
    raise UnwindingError(f"could not resolve a near-double zero in [{a}, {b}]")


def build_zeta_grid(t0: float, t1: float, step: float, acc: EvalAccuracy | None = None,
                    workers: int = 1) -> ZetaGrid:
    """Evaluate zeta(1/2 + it) on t0, t0 + step, ... up to t1 and unwind its argument.

    Away from zeros arg zeta = -theta(t) + pi j with j fixed; each sign change of
    Z(t) raises j by one. Sign changes are counted on an internal sub-grid fine
    enough that theta moves by less than pi/4 per node, and sub-grid nodes where
    |Z| has a shallow local minimum are refined by halving to catch pairs of
    zeros inside one node spacing. Only the requested nodes are returned.
    """
    acc = acc or EvalAccuracy()
    if not (0 <= t0 < t1) or not step > 0:
        raise DomainError("need 0 <= t0 < t1 and step > 0")
    n = int(round((t1 - t0) / step))
    if n < 2 or abs(t0 + n * step - t1) > 1e-9 * max(1.0, t1):
        raise DomainError("(t1 - t0) must be a multiple of step with at least 2 intervals")
    # theta'(t) = (1/2) ln(t / 2 pi) + O(t^-2)
    drift = 0.5 * math.log(max(t1, 2 * math.pi) / (2 * math.pi)) + 0.1
    sub = max(1, math.ceil(step * drift / (math.pi / 4)))
    h = step / sub
    t = t0 + h * np.arange(n * sub + 1)
    z, theta = _eval_z(t, acc, workers)
    sgn = np.sign(z)
    # exact zeros take the sign of the following node
    for i in np.flatnonzero(sgn == 0)[::-1]:
        sgn[i] = sgn[i + 1] if i + 1 < sgn.size else -sgn[i - 1]
    crossings = (sgn[1:] != sgn[:-1]).astype(np.int64)

    flagged = set()
    az = np.abs(z)
    interior = np.flatnonzero((az[1:-1] < az[:-2]) & (az[1:-1] <= az[2:])
                              & (sgn[1:-1] == sgn[:-2]) & (sgn[1:-1] == sgn[2:])) + 1

    def z_fn(ts):
        return critical_line_batch(ts, acc)[0]
    for i in interior:
        y0, y1, y2 = z[i - 1], z[i], z[i + 1]
        curv = y0 - 2 * y1 + y2
        if curv == 0:
            continue
        vertex = y1 - (y2 - y0) ** 2 / (8 * curv)
        if np.sign(vertex) == np.sign(y1) and abs(vertex) > VERTEX_MARGIN * abs(y1):
            continue
        for j in (i - 1, i):
            extra = _hidden_pair(z_fn, t[j], t[j + 1])
            if extra:
                crossings[j] += extra
                flagged.add(int(j) // sub)
                log.warning("two zeros inside [%g, %g]; interval flagged", t[j], t[j + 1])

    if sub > 1:
        crossings = crossings.reshape(n, sub).sum(axis=1)
        z, theta, sgn, az = z[::sub], theta[::sub], sgn[::sub], az[::sub]

    arg0 = _anchor_arg(float(t0), acc)
    j0 = int(round((arg0 + theta[0]) / math.pi))
    if (j0 % 2 == 0) != (sgn[0] > 0):
        raise UnwindingError("anchor parity disagrees with the sign of Z(t0)")
    j = j0 + np.concatenate(([0], np.cumsum(crossings)))
    arg = -theta + math.pi * j
    grid = ZetaGrid(float(t0), float(t0 + n * step), float(step), az, arg, tuple(sorted(flagged)))
    if not grid.check_unwinding():
        raise UnwindingError("increment of arg zeta reached pi; reduce step")
    return grid


# ---------------------------------------------------------------------------
# cache
# ---------------------------------------------------------------------------

_HEADER = struct.Struct("<4sIdddQQ")


def save_grid(grid: ZetaGrid, path: str | os.PathLike) -> None:
    """Binary layout: magic, u32 version, t0/t1/step f64, u64 node count,
    u64 flagged count, then |zeta|, arg (f64 each) and flagged indices (u64)."""
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(_HEADER.pack(CACHE_MAGIC, CACHE_VERSION, grid.t0, grid.t1, grid.step,
                              grid.abs_zeta.size, len(grid.flagged)))
        fh.write(grid.abs_zeta.astype("<f8").tobytes())
        fh.write(grid.arg_zeta_unwound.astype("<f8").tobytes())
        fh.write(np.asarray(grid.flagged, dtype="<u8").tobytes())
    os.replace(tmp, path)


def load_grid(path: str | os.PathLike) -> ZetaGrid:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise RMTLabError("cache file truncated")
    magic, version, t0, t1, step, count, nflag = _HEADER.unpack_from(data)
    if magic != CACHE_MAGIC:
        raise RMTLabError("not a zeta grid cache file")
    if version != CACHE_VERSION:
        raise RMTLabError(f"unsupported cache version {version}")
    expect = _HEADER.size + 16 * count + 8 * nflag
    if len(data) != expect:
        raise RMTLabError("cache file size does not match its header")
    off = _HEADER.size
    a = np.frombuffer(data, "<f8", count, off).astype(float)
    g = np.frombuffer(data, "<f8", count, off + 8 * count).astype(float)
    flags = tuple(int(x) for x in np.frombuffer(data, "<u8", nflag, off + 16 * count))
    return ZetaGrid(t0, t1, step, a, g, flags)


def cached_zeta_grid(t0: float, t1: float, step: float, acc: EvalAccuracy | None = None,
                     cache_dir: str | os.PathLike | None = None, workers: int = 1) -> ZetaGrid:
    """build_zeta_grid with an on-disk cache in ``cache_dir`` or $RMT_CACHE_DIR.

    Without either, this is just build_zeta_grid.
    """
    acc = acc or EvalAccuracy()
    cache_dir = cache_dir or os.environ.get(CACHE_ENV)
    if not cache_dir:
        return build_zeta_grid(t0, t1, step, acc, workers)
    key = repr((float(t0), float(t1), float(step), acc.abs_tol, acc.max_terms, CACHE_VERSION))
    name = "zgrid-" + hashlib.sha256(key.encode()).hexdigest()[:16] + ".bin"
    path = Path(cache_dir) / name
    if path.exists():
        try:
            return load_grid(path)
        except RMTLabError:
            log.warning("ignoring unreadable cache file %s", path)
    grid = build_zeta_grid(t0, t1, step, acc, workers)
    Path(cache_dir).mkdir(parents=True, exist_ok=True)
    save_grid(grid, path)
    return grid


# ---------------------------------------------------------------------------
# moments
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ZetaMoment(MomentEstimate):
    """Grid average; ``excluded`` counts nodes dropped as near-zeros."""

    excluded: int = 0


def _trapezoid_average(grid: ZetaGrid, values: np.ndarray, mask: np.ndarray | None = None) -> ZetaMoment:
    n = values.size
    w = np.ones(n)
    w[0] = w[-1] = 0.5
    if mask is not None:
        w = np.where(mask, w, 0.0)
        values = np.where(mask, values, 0.0)
    mean = float(np.sum(w * values) / np.sum(w))
    # block estimate of the error: 20 equal sub-intervals of nodes
    edges = np.linspace(0, n, BLOCKS + 1).astype(int)
    bmeans = []
    for a, b in zip(edges[:-1], edges[1:]):
        ws = w[a:b]
        if ws.sum() > 0:
            bmeans.append(np.sum(ws * values[a:b]) / ws.sum())
    bmeans = np.array(bmeans)
    se = float(bmeans.std(ddof=1) / math.sqrt(bmeans.size)) if bmeans.size > 1 else math.nan
    excluded = 0 if mask is None else int(n - np.count_nonzero(mask))
    return ZetaMoment(mean, se, n, Estimator.BLOCK_QUADRATURE, excluded)


def zeta_abs_moment(grid: ZetaGrid, k: float) -> ZetaMoment:
    """(1/(t1 - t0)) int |zeta(1/2 + it)|^(2k) dt."""
    if not k > 0:
        raise DomainError("k must be positive")
    return _trapezoid_average(grid, grid.abs_zeta ** (2 * k))


def zeta_log_moment(grid: ZetaGrid, m: int) -> ZetaMoment:
    """Average of (ln|zeta|)^(2m), nodes with |zeta| < 1e-12 excluded and counted."""
    if m < 0 or int(m) != m:
        raise DomainError("m must be a non-negative integer")
    if m == 0:
        return ZetaMoment(1.0, 0.0, grid.abs_zeta.size, Estimator.BLOCK_QUADRATURE, 0)
    mask = grid.abs_zeta >= NEAR_ZERO
    lv = np.log(np.where(mask, grid.abs_zeta, 1.0))
    return _trapezoid_average(grid, lv ** (2 * m), mask)


def log_abs_samples(grid: ZetaGrid) -> np.ndarray:
    """ln|zeta| at the grid nodes that are not near-zeros."""
    return np.log(grid.abs_zeta[grid.abs_zeta >= NEAR_ZERO])


def zeta_arg_moment(grid: ZetaGrid, m: int) -> ZetaMoment:
    """Average of (arg zeta)^(2m) with the continuously unwound argument."""
    if m < 0 or int(m) != m:
        raise DomainError("m must be a non-negative integer")
    return zeta_arg_power(grid, 2 * m)


def zeta_arg_power(grid: ZetaGrid, p: int) -> ZetaMoment:
    """Average of (arg zeta)^p for any integer p >= 0, odd powers included."""
    if p < 0 or int(p) != p:
        raise DomainError("p must be a non-negative integer")
    if p == 0:
        return ZetaMoment(1.0, 0.0, grid.abs_zeta.size, Estimator.BLOCK_QUADRATURE, 0)
    return _trapezoid_average(grid, grid.arg_zeta_unwound ** p)


def xi_prefactor(lam):
    """A(lam) = pi^(-1/4) exp(Re ln Gamma(1/4 + i lam/2)) (-lam^2/2 - 1/4)."""
    la = np.asarray(lam, dtype=float)
    out = np.exp(-0.25 * LOG_PI + np.real(ln_gamma_complex(0.25 + 0.5j * la))) * (-0.5 * la * la - 0.25)
    return float(out) if np.ndim(lam) == 0 else out


def selberg_scale(t_height: float) -> float:
    """(1/2) ln ln T, the leading variance of ln|zeta| and of arg zeta."""
    if not t_height > math.e:
        raise DomainError("T must exceed e")
    return 0.5 * math.log(math.log(t_height))

"""Moment transfer along the tridiagonal model, for integer powers of det(lambda - X).

For the Gaussian ensemble the characteristic polynomial obeys the three-term
recursion D_j = (lambda - a_j) D_{j-1} - b_{j-1}^2 D_{j-2} with independent
a_j ~ N(0, 1/N) and b_j^2 ~ Gamma(j, 1/N) (off-diagonals taken in ascending
order; reversing the matrix does not change its spectrum). The vector

    S_i = E[D_j^i D_{j-1}^(2k-i)],  i = 0..2k,

evolves linearly once the a's are integrated out. Averaging over the b's as
well gives an exact finite-N value; sampling the b's and resampling gives a
sequential Monte Carlo estimator with far smaller variance than averaging
det^(2k) over whole matrices.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import comb, gammaln

from ..errors import DomainError, NumericOverflowError
from .config import EnsembleConfig, Estimator, Gaussian, MomentEstimate, stream

SMC_CHUNK = 500


def _diag_moments(lam: float, n: int, order: int) -> np.ndarray:
    """E[(lam - a)^r] for a ~ N(0, 1/n), r = 0..order."""
    var = 1.0 / n
    out = np.zeros(order + 1)
    for r in range(order + 1):
        total = 0.0
        dfact = 1.0  # (j-1)!!
        for j in range(0, r + 1, 2):
            if j > 0:
                dfact *= j - 1
            total += comb(r, j, exact=True) * lam ** (r - j) * var ** (j // 2) * dfact
        out[r] = total
    return out


def _transfer_tables(k: int):
    """Index tables so that T_i = sum_r C(i,r) mc_r (-b^2)^(i-r) S_(r+2k-i)."""
    size = 2 * k + 1
    rows, rs, cols, coefs = [], [], [], []
    for i in range(size):
        for r in range(i + 1):
            rows.append(i)
            rs.append(r)
            cols.append(r + 2 * k - i)
            coefs.append(comb(i, r, exact=True))
    return (np.array(rows), np.array(rs), np.array(cols), np.array(coefs, dtype=float))


def exact_gaussian_moment(n: int, m: int, lam: float, k: int) -> float:
    """E[det(lam - X)^(2k)] for the M x M Gaussian ensemble with weight exp(-(n/2)Tr X^2).

    Exact up to rounding; the alternating recursion loses digits when m is
    large and lam sits deep in the bulk, so it is meant as a check at small m.
    """
    if int(k) != k or k < 1:
        raise DomainError("exact transfer needs integer k >= 1")
    k = int(k)
    size = 2 * k + 1
    mc = _diag_moments(lam, n, 2 * k)
    rows, rs, cols, coefs = _transfer_tables(k)
    s = np.zeros(size)
    s[2 * k] = 1.0
    for j in range(1, m + 1):
        shape = j - 1
        q = rows - rs
        if shape == 0:
            bq = (q == 0).astype(float)
        else:
            bq = np.exp(gammaln(shape + q) - gammaln(shape) - q * math.log(n))
        t = np.zeros(size)
        np.add.at(t, rows, coefs * mc[rs] * (-1.0) ** q * bq * s[cols])
        s = t
    return float(s[2 * k])


def _systematic_resample(w: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    p = w.size
    c = np.cumsum(w)
    c /= c[-1]
    u = (rng.random() + np.arange(p)) / p
    return np.minimum(np.searchsorted(c, u), p - 1)


def _smc_chunk(cfg: EnsembleConfig, lam: float, k: int, chunk: int, particles: int) -> float:
    """log of one unbiased estimate of E[det^(2k)], chunk-local RNG."""
    rng = stream(cfg.seed, chunk)
    n, m = cfg.n, cfg.matrix_size
    size = 2 * k + 1
    mc = _diag_moments(lam, n, 2 * k)
    rows, rs, cols, coefs = _transfer_tables(k)
    q = rows - rs
    base = coefs * mc[rs] * (-1.0) ** q

    # first step has no off-diagonal: S_i = mc_i exactly
    v = np.tile(mc, (particles, 1))
    log_z = 0.0
    for j in range(2, m + 1):
        w = np.abs(v).sum(axis=1)
        if not np.all(w > 0):
            raise NumericOverflowError("transfer state collapsed to zero")
        log_z += math.log(w.mean())
        v = v / w[:, None]
        v = v[_systematic_resample(w, rng)]
        b2 = rng.gamma(j - 1, 1.0 / n, particles)
        t = np.zeros((particles, size))
        terms = base[None, :] * b2[:, None] ** q[None, :] * v[:, cols]
        for i in range(size):
            t[:, i] = terms[:, rows == i].sum(axis=1)
        v = t
    mean = v[:, 2 * k].mean()
    if mean <= 0:
        return -math.inf
    return log_z + math.log(mean)


def smc_normalized_moment(cfg: EnsembleConfig, lam: float, k: int, log_shift: float,
                          workers: int = 1) -> MomentEstimate:
    """SMC estimate of E[exp(2k L)]; ``log_shift`` = 2k(-(N/2)V(lam) + (N/2) l_V)."""
    if not isinstance(cfg.potential, Gaussian):
        raise DomainError("the transfer estimator needs the Gaussian potential")
    if int(k) != k or k < 1:
        raise DomainError("the transfer estimator needs integer k >= 1")
    from .sampling import _chunks, _map

    parts = _chunks(cfg.samples, SMC_CHUNK)
    logs = np.array(_map(lambda c, cnt: _smc_chunk(cfg, lam, int(k), c, cnt), parts, workers))
    logs = logs + log_shift
    top = float(np.max(logs))
    if not math.isfinite(top) or top > 700:
        raise NumericOverflowError("moment estimate overflows double precision")
    vals = np.exp(logs)
    # chunks differ in size only at the tail; weight by particle count
    sizes = np.array([cnt for _, cnt in parts], dtype=float)
    mean = float(np.sum(vals * sizes) / sizes.sum())
    if len(vals) > 1:
        var = float(np.sum(sizes * (vals - mean) ** 2) / sizes.sum())
        std_err = math.sqrt(var / (len(vals) - 1))
    else:
        std_err = math.nan
    return MomentEstimate(mean, std_err, cfg.samples, Estimator.SMC)

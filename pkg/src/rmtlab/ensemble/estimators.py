"""Monte Carlo estimators built on sampled spectra."""

from __future__ import annotations

import math

import numpy as np
from scipy import stats

from ..analytic import log_potential_constant, potential
from ..errors import DomainError, NumericOverflowError, PoleError
from .config import EnsembleConfig, Estimator, MCMCSettings, MomentEstimate, NormalityReport, SpectrumSample
from .sampling import SpectrumBatch, draw_spectra, draw_tilted
from .transfer import smc_normalized_moment

SINGULAR_FLOOR = 1e-300
MAX_LOG_ORDER = 8
TI_NODES = 8


def _normalization(n: int, lam: float, g: float) -> float:
    return -0.5 * n * float(potential(lam, g)) + 0.5 * n * log_potential_constant(g)


def log_char_poly(s: SpectrumSample, lam: float) -> float:
    """sum_i ln|lam - lambda_i| - (N/2)V(lam) + (N/2) l_V, with l_V = 1 for the Gaussian."""
    cfg = s.config
    d = np.abs(lam - s.eigenvalues)
    if d.min() < SINGULAR_FLOOR:
        raise PoleError("lambda coincides with an eigenvalue")
    return float(np.sum(np.log(d))) + _normalization(cfg.n, lam, cfg.potential.g)


def log_char_poly_values(batch: SpectrumBatch, lam: float) -> np.ndarray:
    """L(lam) for every spectrum of the batch (row sums in a fixed order)."""
    d = np.abs(lam - batch.eigenvalues)
    if d.size and d.min() < SINGULAR_FLOOR:
        raise PoleError("lambda coincides with an eigenvalue")
    cfg = batch.config
    return np.log(d).sum(axis=1) + _normalization(cfg.n, lam, cfg.potential.g)


def _summarize(values: np.ndarray, groups: np.ndarray | None) -> MomentEstimate:
    """Mean with i.i.d. or batch-means standard error."""
    count = values.shape[0]
    mean = values.mean()
    if groups is None:
        se = values.std(ddof=1) / math.sqrt(count) if count > 1 else math.nan
        est = Estimator.PLAIN
    else:
        labels, inv = np.unique(groups, return_inverse=True)
        nb = labels.size
        sums = np.zeros(nb, dtype=values.dtype)
        np.add.at(sums, inv, values)
        sizes = np.bincount(inv, minlength=nb)
        bmeans = sums / sizes
        se = math.sqrt(np.sum(sizes ** 2 * np.abs(bmeans - mean) ** 2) / (count ** 2) * nb / (nb - 1)) \
            if nb > 1 else math.nan
        est = Estimator.BATCH_MEANS
    if np.iscomplexobj(values):
        mean = complex(mean)
    else:
        mean = float(mean)
    return MomentEstimate(mean, float(se), count, est)


def _check_lambda(lam: float):
    if not math.isfinite(lam):
        raise DomainError("lambda must be finite")


def estimate_normalized_moment(cfg: EnsembleConfig, lam: float, k: float, method: str = "plain",
                               workers: int = 1, mcmc: MCMCSettings | None = None) -> MomentEstimate:
    """<exp(2k L(lam))>.

    ``method="plain"`` averages over sampled spectra with max-shift log
    accumulation. ``method="smc"`` (Gaussian, integer k) uses the transfer
    estimator, in which case ``cfg.samples`` counts particles.
    ``method="ti"`` integrates d/dk' ln<exp(2k'L)> = 2<L>_k' over k' in
    [0, k], each <L>_k' taken under the Metropolis ensemble tilted by
    |det(lam - X)|^(2k'); ``cfg.samples`` spectra are drawn per node.
    """
    _check_lambda(lam)
    if not k > 0:
        raise DomainError("k must be positive")
    if method == "ti":
        return _thermodynamic_integration(cfg, lam, k, workers, mcmc or MCMCSettings())
    if method == "smc":
        shift = 2 * k * _normalization(cfg.n, lam, cfg.potential.g)
        return smc_normalized_moment(cfg, lam, int(k) if int(k) == k else k, shift, workers)
    if method != "plain":
        raise DomainError(f"unknown method {method!r}")
    batch = draw_spectra(cfg, workers=workers, mcmc=mcmc)
    w = 2 * k * log_char_poly_values(batch, lam)
    top = float(w.max())
    est = _summarize(np.exp(w - top), batch.groups)
    scale = math.exp(top) if top < 709 else math.inf
    if est.mean * scale == math.inf or not math.isfinite(scale):
        raise NumericOverflowError("moment overflows double precision: k too large for this N")
    return MomentEstimate(est.mean * scale, est.std_err * scale, est.count, est.estimator)


def _thermodynamic_integration(cfg: EnsembleConfig, lam: float, k: float, workers: int,
                               mcmc: MCMCSettings) -> MomentEstimate:
    x, w = np.polynomial.legendre.leggauss(TI_NODES)
    nodes = 0.5 * k * (1 + x)
    weights = 0.5 * k * w
    log_m = 0.0
    var = 0.0
    for j, (kj, wj) in enumerate(zip(nodes, weights)):
        batch = draw_tilted(cfg, float(lam), float(2 * kj), mcmc, int(workers), (j + 1) << 32)
        est = _summarize(log_char_poly_values(batch, lam), batch.groups)
        log_m += 2 * wj * est.mean
        var += (2 * wj * est.std_err) ** 2
    if log_m > 709:
        raise NumericOverflowError("moment overflows double precision: k too large for this N")
    mean = math.exp(log_m)
    return MomentEstimate(mean, mean * math.sqrt(var), cfg.samples * TI_NODES, Estimator.TI)


def estimate_log_moments(cfg: EnsembleConfig, lam: float, max_order: int, workers: int = 1,
                         mcmc: MCMCSettings | None = None) -> list[MomentEstimate]:
    """Raw moments <L^p>, p = 1..max_order."""
    _check_lambda(lam)
    if not 1 <= max_order <= MAX_LOG_ORDER:
        raise DomainError(f"max_order must be in [1, {MAX_LOG_ORDER}]")
    batch = draw_spectra(cfg, workers=workers, mcmc=mcmc)
    vals = log_char_poly_values(batch, lam)
    return [_summarize(vals ** p, batch.groups) for p in range(1, max_order + 1)]


def log_char_poly_sample(cfg: EnsembleConfig, lam: float, workers: int = 1,
                         mcmc: MCMCSettings | None = None) -> np.ndarray:
    """All sampled L(lam) values, e.g. for normality_diagnostics."""
    return log_char_poly_values(draw_spectra(cfg, workers=workers, mcmc=mcmc), lam)


def estimate_two_point(cfg: EnsembleConfig, lambda1: float, lambda2: float, p1: int, p2: int,
                       workers: int = 1, mcmc: MCMCSettings | None = None) -> MomentEstimate:
    """<L(lambda1)^p1 L(lambda2)^p2>."""
    if lambda1 == lambda2:
        raise DomainError("lambda1 and lambda2 must differ")
    if not (-2 < lambda1 < 2 and -2 < lambda2 < 2):
        raise DomainError("both points must lie inside (-2, 2)")
    if p1 < 0 or p2 < 0:
        raise DomainError("powers must be non-negative")
    batch = draw_spectra(cfg, workers=workers, mcmc=mcmc)
    a = log_char_poly_values(batch, lambda1)
    b = log_char_poly_values(batch, lambda2)
    return _summarize(a ** p1 * b ** p2, batch.groups)


def _resolvent_traces(batch: SpectrumBatch, z: complex) -> np.ndarray:
    return (1.0 / (z - batch.eigenvalues)).sum(axis=1)


def _check_resolvent_point(z: complex, cfg: EnsembleConfig):
    dist = abs(z.imag) if -2 <= z.real <= 2 else abs(z - max(-2.0, min(2.0, z.real)))
    if dist < 0.1:
        raise DomainError("resolvent points must be at distance >= 0.1 from [-2, 2]")


def estimate_resolvent_mean(cfg: EnsembleConfig, z: complex, workers: int = 1,
                            mcmc: MCMCSettings | None = None) -> MomentEstimate:
    """<Tr 1/(z - X)> / N."""
    z = complex(z)
    _check_resolvent_point(z, cfg)
    batch = draw_spectra(cfg, workers=workers, mcmc=mcmc)
    return _summarize(_resolvent_traces(batch, z) / cfg.n, batch.groups)


def estimate_resolvent_pair(cfg: EnsembleConfig, z1: complex, z2: complex, workers: int = 1,
                            mcmc: MCMCSettings | None = None) -> MomentEstimate:
    """Connected part <T1 T2> - <T1><T2>, T_j = sum_i 1/(z_j - lambda_i).

    The error comes from the delta method: the centred product
    (T1 - <T1>)(T2 - <T2>) has the same first-order fluctuation.
    """
    z1, z2 = complex(z1), complex(z2)
    _check_resolvent_point(z1, cfg)
    _check_resolvent_point(z2, cfg)
    batch = draw_spectra(cfg, workers=workers, mcmc=mcmc)
    t1 = _resolvent_traces(batch, z1)
    t2 = _resolvent_traces(batch, z2)
    c = (t1 - t1.mean()) * (t2 - t2.mean())
    est = _summarize(c, batch.groups)
    count = est.count
    # unbiased covariance
    mean = est.mean * count / (count - 1) if count > 1 else est.mean
    return MomentEstimate(mean, est.std_err, count, est.estimator)


def estimate_saddle_point(cfg: EnsembleConfig, lam: float, eps: float = 0.05, workers: int = 1,
                          mcmc: MCMCSettings | None = None) -> MomentEstimate:
    """Re <(1/N) sum_i 1/(lam + i eps - lambda_i)>, to compare with V'(lam)/2 inside the band."""
    if not eps > 0:
        raise DomainError("eps must be positive")
    batch = draw_spectra(cfg, workers=workers, mcmc=mcmc)
    vals = (1.0 / (complex(lam, eps) - batch.eigenvalues)).sum(axis=1).real / cfg.n
    return _summarize(vals, batch.groups)


def empirical_density(batch: SpectrumBatch, lam: float, bandwidth: float = 0.05) -> float:
    """Gaussian-kernel density estimate of the eigenvalue density at ``lam``."""
    if not bandwidth > 0:
        raise DomainError("bandwidth must be positive")
    u = (lam - batch.eigenvalues) / bandwidth
    return float(np.exp(-0.5 * u * u).sum() / (u.size * bandwidth * math.sqrt(2 * math.pi)))


def normality_diagnostics(values) -> NormalityReport:
    """Skewness, excess kurtosis and KS distance to the moment-fitted normal."""
    x = np.asarray(values, dtype=float)
    if x.ndim != 1 or x.size < 100:
        raise DomainError("need at least 100 values")
    sd = x.std(ddof=1)
    if not sd > 0:
        raise DomainError("degenerate sample: zero variance")
    ks = stats.kstest(x, "norm", args=(x.mean(), sd)).statistic
    return NormalityReport(float(stats.skew(x)), float(stats.kurtosis(x)), float(ks))

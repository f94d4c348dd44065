"""Eigenvalue sampling for the Gaussian and quartic ensembles."""

from __future__ import annotations

import functools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..analytic import equilibrium_density, quartic_band_edge
from ..errors import ConvergenceError, DomainError, SamplingError
from . import _kernels
from .config import EnsembleConfig, Gaussian, MCMCSettings, Quartic, SpectrumSample, stream

log = logging.getLogger(__name__)

GAUSSIAN_CHUNK = 256
_TUNE_BLOCK = 50
_TARGET_ACCEPT = 0.4
_SWEEP_BLOCK = 1024


def eigs_sym_tridiag(diag, offdiag) -> np.ndarray:
    """Sorted eigenvalues of the symmetric tridiagonal matrix (diag, offdiag)."""
    d = np.ascontiguousarray(diag, dtype=float)
    e = np.ascontiguousarray(offdiag, dtype=float)
    if d.ndim != 1 or e.ndim != 1 or e.size != max(d.size - 1, 0):
        raise DomainError("offdiag must have length len(diag) - 1")
    if d.size == 0:
        return d.copy()
    if not (np.all(np.isfinite(d)) and np.all(np.isfinite(e))):
        raise DomainError("entries must be finite")
    ev, ok = _kernels.tql_eigenvalues(d, e)
    if not ok:
        raise ConvergenceError("QL iteration cap reached")
    return ev


def gue_matrix(m: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """Dense Hermitian matrix with density proportional to exp(-(n/2) Tr X^2)."""
    sd = math.sqrt(1.0 / (2 * n))
    z = rng.normal(0.0, sd, (m, m)) + 1j * rng.normal(0.0, sd, (m, m))
    h = np.triu(z, 1)
    h = h + h.conj().T
    h[np.diag_indices(m)] = rng.normal(0.0, math.sqrt(1.0 / n), m)
    return h


def hermitian_eigenvalues(h: np.ndarray) -> np.ndarray:
    """Householder reduction then QL."""
    d, e = _kernels.householder_tridiagonal(np.ascontiguousarray(h, dtype=complex))
    return eigs_sym_tridiag(d, e)


def _tridiagonal_draw(m: int, n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    diag = rng.normal(0.0, math.sqrt(1.0 / n), m)
    # b_k^2 = chi^2_{2(m-k)} / (2n), k = 1..m-1
    shape = np.arange(m - 1, 0, -1, dtype=float)
    off = np.sqrt(rng.gamma(shape, 1.0 / n))
    return diag, off


def _gue_chunk(cfg: EnsembleConfig, chunk: int, count: int, dense: bool) -> np.ndarray:
    rng = stream(cfg.seed, chunk)
    m, n = cfg.matrix_size, cfg.n
    out = np.empty((count, m))
    for i in range(count):
        if dense:
            out[i] = hermitian_eigenvalues(gue_matrix(m, n, rng))
        else:
            out[i] = eigs_sym_tridiag(*_tridiagonal_draw(m, n, rng))
    return out


def sample_gue(cfg: EnsembleConfig, method: str = "tridiagonal", index: int = 0) -> SpectrumSample:
    """One Gaussian spectrum; ``index`` picks the RNG stream."""
    if not isinstance(cfg.potential, Gaussian):
        raise DomainError("sample_gue needs the Gaussian potential")
    if method not in ("tridiagonal", "dense"):
        raise DomainError(f"unknown method {method!r}")
    ev = _gue_chunk(cfg, index, 1, method == "dense")[0]
    return SpectrumSample(ev, cfg)


def _initial_state(m: int, g: float) -> np.ndarray:
    """Quantiles of the equilibrium density, a good place to start a chain."""
    edge = quartic_band_edge(g)
    grid = np.linspace(-edge, edge, 4001)
    rho = equilibrium_density(grid, g)
    cdf = np.concatenate(([0.0], np.cumsum(0.5 * (rho[1:] + rho[:-1]) * np.diff(grid))))
    cdf /= cdf[-1]
    return np.interp((np.arange(m) + 0.5) / m, cdf, grid)


def _run_chain(cfg: EnsembleConfig, mcmc: MCMCSettings, chain: int, count: int,
               charge_pos: float = 0.0, charge: float = 0.0):
    """Returns (samples (count, M), acceptance rate after burn-in, final step)."""
    g = cfg.potential.g
    m, n = cfg.matrix_size, cfg.n
    rng = stream(cfg.seed, chain)
    x = _initial_state(m, g)
    if charge != 0.0:
        # keep the start off the extra charge, where the tilted density vanishes
        x[np.abs(x - charge_pos) < 1e-9] += 0.5 / n
    step = mcmc.step if mcmc.step is not None else 1.0 / n
    empty = np.empty((0, m))

    done = 0
    while done < mcmc.burn_in:
        block = min(_TUNE_BLOCK, mcmc.burn_in - done)
        acc = _kernels.metropolis_sweeps(x, float(n), g, charge_pos, charge, step, rng.standard_normal((block, m)),
                                         rng.random((block, m)), 1, empty)
        if mcmc.tune:
            rate = acc / (block * m)
            step *= min(2.0, max(0.5, math.exp(2.0 * (rate - _TARGET_ACCEPT))))
        done += block

    out = np.empty((count, m))
    sweeps_left = count * mcmc.thin
    row = 0
    accepted = 0
    while sweeps_left > 0:
        block = min(_SWEEP_BLOCK * mcmc.thin, sweeps_left)
        rows = block // mcmc.thin
        accepted += _kernels.metropolis_sweeps(x, float(n), g, charge_pos, charge, step, rng.standard_normal((block, m)),
                                               rng.random((block, m)), mcmc.thin, out[row:row + rows])
        row += rows
        sweeps_left -= block
    rate = accepted / (count * mcmc.thin * m)
    log.info("quartic chain %d: acceptance %.3f, step %.4g", chain, rate, step)
    if not 0.1 <= rate <= 0.9:
        raise SamplingError(f"Metropolis acceptance {rate:.3f} outside [0.1, 0.9]; adjust step")
    return out, rate, step


def sample_quartic(cfg: EnsembleConfig, mcmc: MCMCSettings | None = None, index: int = 0) -> SpectrumSample:
    """One spectrum from the quartic ensemble: the state after burn-in plus one thinning interval."""
    if not isinstance(cfg.potential, Quartic):
        raise DomainError("sample_quartic needs a Quartic potential")
    out, _, _ = _run_chain(cfg, mcmc or MCMCSettings(), index, 1)
    return SpectrumSample(out[0], cfg)


@dataclass(frozen=True, eq=False)
class SpectrumBatch:
    """Many spectra of one configuration.

    ``groups`` labels each row with an independence block: rows in different
    blocks are independent (used for batch-means errors on Markov chains).
    """

    eigenvalues: np.ndarray
    groups: np.ndarray | None
    config: EnsembleConfig
    acceptance: float | None = None


def _map(fn, args, workers: int):
    if workers <= 1:
        return [fn(*a) for a in args]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        # map preserves submission order, so the fold is deterministic
        return list(pool.map(lambda a: fn(*a), args))


def _chunks(total: int, size: int):
    return [(i, min(size, total - i * size)) for i in range(-(-total // size))]


def _chain_batch(cfg: EnsembleConfig, mcmc: MCMCSettings, workers: int, stream_base: int,
                 charge_pos: float = 0.0, charge: float = 0.0) -> SpectrumBatch:
    chains = min(mcmc.chains, cfg.samples)
    per = -(-cfg.samples // chains)
    res = _map(lambda c: _run_chain(cfg, mcmc, stream_base + c, per, charge_pos, charge),
               [(c,) for c in range(chains)], workers)
    ev = np.concatenate([r[0] for r in res])[:cfg.samples]
    # split every chain into 4 contiguous batches
    per_batch = max(1, -(-per // 4))
    groups = np.repeat(np.arange(chains), per) * 4 + np.tile(np.arange(per) // per_batch, chains)
    acc = float(np.mean([r[1] for r in res]))
    return SpectrumBatch(ev, groups[:cfg.samples], cfg, acc)


@functools.lru_cache(maxsize=16)
def draw_tilted(cfg: EnsembleConfig, lam: float, charge: float, mcmc: MCMCSettings,
                workers: int = 1, stream_base: int = 0) -> SpectrumBatch:
    """Metropolis spectra weighted by an extra factor |det(lam - X)|^charge.

    Works for either potential (the Gaussian one is run as quartic g = 0).
    ``stream_base`` offsets the chain stream indices so that different tilts
    use disjoint streams.
    """
    batch = _chain_batch(cfg, mcmc, int(workers), stream_base, float(lam), float(charge))
    batch.eigenvalues.setflags(write=False)
    return batch


@functools.lru_cache(maxsize=6)
def _draw_cached(cfg: EnsembleConfig, method: str, mcmc: MCMCSettings, workers: int) -> SpectrumBatch:
    if isinstance(cfg.potential, Gaussian):
        parts = _map(lambda c, cnt: _gue_chunk(cfg, c, cnt, method == "dense"),
                     _chunks(cfg.samples, GAUSSIAN_CHUNK), workers)
        ev = np.concatenate(parts)
        batch = SpectrumBatch(ev, None, cfg)
    else:
        batch = _chain_batch(cfg, mcmc, workers, 0)
    batch.eigenvalues.setflags(write=False)
    return batch


def draw_spectra(cfg: EnsembleConfig, workers: int = 1, method: str = "tridiagonal",
                 mcmc: MCMCSettings | None = None) -> SpectrumBatch:
    """``cfg.samples`` spectra; identical output for every ``workers`` value."""
    if method not in ("tridiagonal", "dense"):
        raise DomainError(f"unknown method {method!r}")
    if workers < 1:
        raise DomainError("workers must be >= 1")
    return _draw_cached(cfg, method, mcmc or MCMCSettings(), 1 if workers is None else int(workers))

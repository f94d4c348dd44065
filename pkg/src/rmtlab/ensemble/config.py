"""Configuration and result records for ensemble experiments, plus RNG streams."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from ..errors import DomainError

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class Gaussian:
    """V(x) = x^2/2."""

    g: float = field(default=0.0, init=False)
    name = "gaussian"


@dataclass(frozen=True)
class Quartic:
    """V(x) = x^2/2 + g x^4, sampled by Metropolis even when g = 0."""

    g: float = 0.0
    name = "quartic"

    def __post_init__(self):
        if not self.g >= 0:
            raise DomainError(f"quartic coupling must be >= 0, got {self.g}")


Potential = Gaussian | Quartic


@dataclass(frozen=True)
class EnsembleConfig:
    """One Monte Carlo experiment.

    ``n`` fixes the weight exp(-n Tr V); ``matrix_size`` defaults to ``n``.
    Use :meth:`shifted` for the M = N - round(K) bookkeeping.
    """

    n: int
    matrix_size: int | None = None
    potential: Potential = Gaussian()
    seed: int = 0
    samples: int = 1000

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise DomainError(f"n must be an integer >= 2, got {self.n}")
        if self.matrix_size is None:
            object.__setattr__(self, "matrix_size", int(self.n))
        if not 1 <= self.matrix_size <= self.n:
            raise DomainError(f"matrix_size must lie in [1, n], got {self.matrix_size}")
        if self.samples < 1:
            raise DomainError("samples must be >= 1")
        if not 0 <= self.seed <= _MASK64:
            raise DomainError("seed must be a 64-bit unsigned integer")
        if not isinstance(self.potential, (Gaussian, Quartic)):
            raise DomainError(f"unknown potential {self.potential!r}")

    @classmethod
    def shifted(cls, n: int, k: float, **kw) -> "EnsembleConfig":
        """Config with matrix_size = n - round(k)."""
        return cls(n=n, matrix_size=n - int(round(k)), **kw)

    def with_samples(self, samples: int) -> "EnsembleConfig":
        return EnsembleConfig(self.n, self.matrix_size, self.potential, self.seed, samples)


@dataclass(frozen=True)
class MCMCSettings:
    """Metropolis controls. ``step`` is the starting proposal width; it is
    retuned toward 40% acceptance during burn-in when ``tune`` is set."""

    burn_in: int = 2000
    thin: int = 2
    step: float | None = None
    tune: bool = True
    chains: int = 16

    def __post_init__(self):
        if self.burn_in < 0 or self.thin < 1 or self.chains < 1:
            raise DomainError("burn_in >= 0, thin >= 1 and chains >= 1 required")
        if self.step is not None and not self.step > 0:
            raise DomainError("step must be positive")


@dataclass(frozen=True, eq=False)
class SpectrumSample:
    eigenvalues: np.ndarray
    config: EnsembleConfig

    def __post_init__(self):
        ev = np.asarray(self.eigenvalues, dtype=float)
        if ev.ndim != 1 or not np.all(np.isfinite(ev)):
            raise DomainError("eigenvalues must be a finite 1-d array")
        if np.any(np.diff(ev) < 0):
            raise DomainError("eigenvalues must be sorted ascending")
        ev.setflags(write=False)
        object.__setattr__(self, "eigenvalues", ev)


class Estimator(enum.Enum):
    PLAIN = "plain"
    SMC = "smc"
    BATCH_MEANS = "batch_means"
    TI = "thermodynamic_integration"
    BLOCK_QUADRATURE = "block_quadrature"


@dataclass(frozen=True)
class MomentEstimate:
    mean: float | complex
    std_err: float
    count: int
    estimator: Estimator


@dataclass(frozen=True)
class NormalityReport:
    skewness: float
    excess_kurtosis: float
    ks_statistic: float


def stream(seed: int, index: int) -> np.random.Generator:
    """Independent Philox stream number ``index`` of the seed family ``seed``.

    Streams are keyed per chunk of work rather than per worker thread, so the
    numbers a chunk sees never depend on how many workers run.
    """
    key = (int(seed) & _MASK64) | ((int(index) & _MASK64) << 64)
    return np.random.Generator(np.random.Philox(key=key))

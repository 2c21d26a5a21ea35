"""
Photon-number distribution models.

Three families are provided: coherent (Poisson), multimode thermal and a
binomial sub-Poissonian test source.  Each model evaluates its pmf in log
space, reports analytic moments, samples with an explicit numpy Generator
and knows its closed form under binomial thinning.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, ClassVar

import numpy as np
from scipy import special, stats

from .errors import ParameterDomainError

#: Tail mass left outside the truncated pmf support.
TAIL_MASS = 1e-12


def _check_n(n):
    arr = np.asarray(n)
    if arr.dtype.kind not in "iu":
        if not np.all(np.equal(np.mod(arr, 1), 0)):
            raise ParameterDomainError("photon numbers must be integers")
    if np.any(arr < 0):
        raise ParameterDomainError("photon numbers must be nonnegative")
    return arr.astype(np.float64)


@dataclass(frozen=True)
class PhotonNumberModel:
    """Base class for photon-number distributions.

    Subclasses implement ``logpmf``, ``moments``, ``sample``, ``thinned``
    and ``_tail_index``.  Everything else is shared.
    """

    kind: ClassVar[str] = ""

    def logpmf(self, n):
        raise NotImplementedError

    def pmf(self, n):
        """Probability of exactly ``n`` photons (scalar or array)."""
        out = np.exp(self.logpmf(n))
        return float(out) if np.ndim(out) == 0 else out

    def moments(self) -> tuple[float, float]:
        raise NotImplementedError

    @property
    def mean(self) -> float:
        return self.moments()[0]

    def mandel_q(self) -> float:
        """Mandel Q = variance / mean - 1."""
        mean, var = self.moments()
        return var / mean - 1.0

    def fano(self) -> float:
        mean, var = self.moments()
        return var / mean

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        raise NotImplementedError

    def thinned(self, eta: float) -> "PhotonNumberModel":
        """Closed-form distribution after Bernoulli loss with survival ``eta``."""
        raise NotImplementedError

    def _tail_index(self, tail: float) -> int:
        raise NotImplementedError

    def support_max(self, tail: float = TAIL_MASS) -> int:
        """Smallest ``n_max`` with ``P(n > n_max) < tail``."""
        return self._tail_index(tail)

    def pmf_table(self, n_max: int | None = None) -> np.ndarray:
        """pmf evaluated on ``0..n_max`` (default: the truncation support)."""
        if n_max is None:
            n_max = self.support_max()
        return self.pmf(np.arange(n_max + 1))

    def to_dict(self) -> dict[str, Any]:
        raise NotImplementedError

    @staticmethod
    def from_dict(data: dict[str, Any]) -> "PhotonNumberModel":
        """Build a model from its JSON object form."""
        kind = data.get("type")
        params = {k: v for k, v in data.items() if k != "type"}
        try:
            cls = _MODEL_TYPES[kind]
        except KeyError:
            raise ParameterDomainError(f"unknown model type {kind!r}") from None
        try:
            return cls(**params)
        except TypeError as exc:
            raise ParameterDomainError(f"bad parameters for {kind}: {exc}") from None


def _scipy_tail(dist, tail: float, upper: int | None = None) -> int:
    # isf gives a good starting guess; walk until the survival function drops
    n = int(max(dist.isf(tail), 0))
    while n > 0 and dist.sf(n - 1) < tail:
        n -= 1
    while dist.sf(n) >= tail:
        n += 1
        if upper is not None and n >= upper:
            return upper
    return n


@dataclass(frozen=True)
class Poisson(PhotonNumberModel):
    """Coherent light: Poissonian photon statistics with mean ``nbar``."""

    nbar: float
    kind: ClassVar[str] = "poisson"

    def __post_init__(self):
        if not (math.isfinite(self.nbar) and self.nbar > 0):
            raise ParameterDomainError(f"Poisson nbar must be > 0, got {self.nbar}")

    def logpmf(self, n):
        n = _check_n(n)
        return n * math.log(self.nbar) - self.nbar - special.gammaln(n + 1)

    def moments(self):
        return float(self.nbar), float(self.nbar)

    def sample(self, rng, count):
        return rng.poisson(self.nbar, size=count).astype(np.int64)

    def thinned(self, eta):
        return Poisson(self.nbar * eta)

    def _tail_index(self, tail):
        return _scipy_tail(stats.poisson(self.nbar), tail)

    def to_dict(self):
        return {"type": self.kind, "nbar": self.nbar}


@dataclass(frozen=True)
class MultimodeThermal(PhotonNumberModel):
    """Convolution of ``mu`` equally populated thermal modes.

    ``mu`` may be any real >= 1; the combinatorial prefactor is evaluated
    with gamma functions so fitted, non-integer mode numbers are accepted.
    """

    nbar: float
    mu: float
    kind: ClassVar[str] = "multimode_thermal"

    def __post_init__(self):
        if not (math.isfinite(self.nbar) and self.nbar > 0):
            raise ParameterDomainError(f"thermal nbar must be > 0, got {self.nbar}")
        if not (math.isfinite(self.mu) and self.mu >= 1):
            raise ParameterDomainError(f"mode number mu must be >= 1, got {self.mu}")

    def logpmf(self, n):
        n = _check_n(n)
        mu, nbar = float(self.mu), float(self.nbar)
        log_coeff = special.gammaln(n + mu) - special.gammaln(n + 1) - special.gammaln(mu)
        return log_coeff - mu * math.log1p(nbar / mu) - n * math.log1p(mu / nbar)

    def moments(self):
        return float(self.nbar), float(self.nbar * (self.nbar / self.mu + 1.0))

    def sample(self, rng, count):
        # gamma-Poisson mixture; exact for real mu
        rate = rng.gamma(shape=self.mu, scale=self.nbar / self.mu, size=count)
        return rng.poisson(rate).astype(np.int64)

    def thinned(self, eta):
        return MultimodeThermal(self.nbar * eta, self.mu)

    def _tail_index(self, tail):
        return _scipy_tail(stats.nbinom(self.mu, self.mu / (self.mu + self.nbar)), tail)

    def to_dict(self):
        return {"type": self.kind, "nbar": self.nbar, "mu": self.mu}


@dataclass(frozen=True)
class BinomialSource(PhotonNumberModel):
    """Sub-Poissonian test source: ``N`` emitters each firing with probability ``p``."""

    N: int
    p: float
    kind: ClassVar[str] = "binomial"

    def __post_init__(self):
        if isinstance(self.N, bool) or int(self.N) != self.N or self.N < 1:
            raise ParameterDomainError(f"binomial N must be an integer >= 1, got {self.N}")
        object.__setattr__(self, "N", int(self.N))
        if not (0.0 < self.p < 1.0):
            raise ParameterDomainError(f"binomial p must lie in (0, 1), got {self.p}")

    def logpmf(self, n):
        n = _check_n(n)
        N, p = self.N, float(self.p)
        inside = n <= N
        k = np.where(inside, n, 0.0)
        out = (special.gammaln(N + 1) - special.gammaln(k + 1) - special.gammaln(N - k + 1)
               + k * math.log(p) + (N - k) * math.log1p(-p))
        return np.where(inside, out, -np.inf)

    def moments(self):
        return float(self.N * self.p), float(self.N * self.p * (1.0 - self.p))

    def sample(self, rng, count):
        return rng.binomial(self.N, self.p, size=count).astype(np.int64)

    def thinned(self, eta):
        return BinomialSource(self.N, self.p * eta)

    def _tail_index(self, tail):
        return _scipy_tail(stats.binom(self.N, self.p), tail, upper=self.N)

    def to_dict(self):
        return {"type": self.kind, "N": self.N, "p": self.p}


_MODEL_TYPES = {cls.kind: cls for cls in (Poisson, MultimodeThermal, BinomialSource)}

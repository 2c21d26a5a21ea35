"""
Sample moments and Fano points with bootstrap uncertainties.
"""

from __future__ import annotations

import hashlib
from dataclasses import asdict, dataclass

import numpy as np

from .detection import AttenuationRun
from .errors import DegenerateRunError, InsufficientDataError

DEFAULT_BOOTSTRAP_ROUNDS = 200
MIN_FANO_SAMPLES = 100


@dataclass(frozen=True)
class FanoPoint:
    """One point ``(vbar, F_v)`` on the calibration line."""

    vbar: float
    fv: float
    se_vbar: float
    se_fv: float
    count: int
    transmittance: float = float("nan")
    label: str = ""

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        return cls(**data)


def estimate_moments(run: AttenuationRun) -> tuple[float, float, int]:
    """Arithmetic mean, Bessel-corrected variance and sample count."""
    x = run.samples
    if x.size < 2:
        raise InsufficientDataError(f"need at least 2 samples, got {x.size}")
    if x.min() == x.max():
        return float(x[0]), 0.0, int(x.size)
    return float(x.mean()), float(x.var(ddof=1)), int(x.size)


def run_digest_seed(run: AttenuationRun) -> int:
    """Deterministic bootstrap seed derived from the run contents."""
    h = hashlib.sha256()
    h.update(np.float64(run.transmittance).tobytes())
    h.update(np.ascontiguousarray(run.samples, dtype=np.float64).tobytes())
    return int.from_bytes(h.digest()[:8], "little")


def _bootstrap_stats(samples, rounds, rng):
    """Bootstrap replicates of (mean, unbiased variance).

    When the data take few distinct values (noiseless chains emit integer
    multiples of alpha) a resample is equivalent to multinomial counts over
    the distinct values, which is far cheaper than index resampling.
    """
    n = samples.size
    values, counts = np.unique(samples, return_counts=True)
    if values.size <= max(64, n // 100):
        # shift by the most frequent value before squaring to limit cancellation
        centre = values[np.argmax(counts)]
        d = values - centre
        freq = rng.multinomial(n, counts / n, size=rounds).astype(np.float64)
        s1 = freq @ d
        s2 = freq @ (d * d)
        means = s1 / n
        variances = (s2 - s1 * s1 / n) / (n - 1)
        return means + centre, variances
    means = np.empty(rounds)
    variances = np.empty(rounds)
    chunk = max(1, 2_000_000 // n)
    for start in range(0, rounds, chunk):
        stop = min(start + chunk, rounds)
        resampled = samples[rng.integers(0, n, size=(stop - start, n))]
        means[start:stop] = resampled.mean(axis=1)
        variances[start:stop] = resampled.var(axis=1, ddof=1)
    return means, variances


def fano_point(run: AttenuationRun, bootstrap_rounds: int = DEFAULT_BOOTSTRAP_ROUNDS,
               seed: int | None = None) -> FanoPoint:
    """Voltage Fano factor ``F_v = s^2 / vbar`` with bootstrap standard errors.

    Parameters
    ----------
    run : AttenuationRun
        At least 100 samples with positive mean.
    bootstrap_rounds : int
        Number of nonparametric bootstrap resamples.
    seed : int, optional
        Bootstrap seed; by default a digest of the run contents, so the same
        run always yields the same standard errors.
    """
    if run.samples.size < MIN_FANO_SAMPLES:
        raise InsufficientDataError(
            f"Fano point needs >= {MIN_FANO_SAMPLES} samples, got {run.samples.size}")
    if bootstrap_rounds < 2:
        raise InsufficientDataError("bootstrap_rounds must be >= 2")
    vbar, var, count = estimate_moments(run)
    if not vbar > 0:
        raise DegenerateRunError(
            f"run {run.label!r} has nonpositive mean voltage {vbar:.4g}; no Fano information")
    rng = np.random.default_rng(run_digest_seed(run) if seed is None else seed)
    means, variances = _bootstrap_stats(run.samples, bootstrap_rounds, rng)
    with np.errstate(divide="ignore", invalid="ignore"):
        fanos = variances / means
    fanos = fanos[np.isfinite(fanos)]
    return FanoPoint(
        vbar=vbar,
        fv=var / vbar,
        se_vbar=float(means.std(ddof=1)),
        se_fv=float(fanos.std(ddof=1)) if fanos.size > 1 else 0.0,
        count=count,
        transmittance=float(run.transmittance),
        label=run.label,
    )

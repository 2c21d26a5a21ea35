"""
Photoelectron histograms from calibrated voltages, and their fidelity
against theoretical photoelectron distributions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

import numpy as np

from .calibration import CalibrationResult
from .detection import AttenuationRun
from .distributions import BinomialSource, MultimodeThermal, Poisson, PhotonNumberModel
from .errors import NormalizationError, ParameterDomainError

NORM_TOL = 1e-9


@dataclass
class ElectronHistogram:
    """Shot counts per photoelectron number ``m``.

    ``counts[m]`` is the number of shots assigned to bin ``m``.  Shots below
    ``-alpha/2`` are clamped into bin 0 and tallied in ``clamped``.
    """

    counts: np.ndarray = field(repr=False)
    clamped: int = 0

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def probabilities(self) -> np.ndarray:
        return self.counts / self.total

    @property
    def clamped_fraction(self) -> float:
        return self.clamped / self.total if self.total else 0.0

    def fractions(self) -> list[Fraction]:
        """Exact bin probabilities."""
        total = self.total
        return [Fraction(int(c), total) for c in self.counts]

    def as_dict(self) -> dict[int, int]:
        return {m: int(c) for m, c in enumerate(self.counts) if c}

    def __add__(self, other: "ElectronHistogram") -> "ElectronHistogram":
        size = max(self.counts.size, other.counts.size)
        merged = np.zeros(size, dtype=np.int64)
        merged[: self.counts.size] += self.counts
        merged[: other.counts.size] += other.counts
        return ElectronHistogram(merged, self.clamped + other.clamped)


def rebin(run: AttenuationRun, alpha: float) -> ElectronHistogram:
    """Assign each sample to the nearest photoelectron number ``round(v/alpha)``.

    Bin ``m`` covers ``[(m - 1/2) alpha, (m + 1/2) alpha)``.
    """
    if not alpha > 0:
        raise ParameterDomainError(f"alpha must be > 0, got {alpha}")
    m = np.floor(run.samples / alpha + 0.5).astype(np.int64)
    negative = m < 0
    clamped = int(negative.sum())
    m[negative] = 0
    return ElectronHistogram(np.bincount(m), clamped)


def _as_probabilities(p, name):
    if isinstance(p, ElectronHistogram):
        p = p.probabilities
    p = np.asarray(p, dtype=np.float64)
    if np.any(p < 0):
        raise NormalizationError(f"{name} has negative entries")
    total = math.fsum(p)
    if abs(total - 1.0) > NORM_TOL:
        raise NormalizationError(f"{name} sums to {total!r}, not 1")
    return p


def fidelity(p, q, start: int = 0) -> float:
    """Bhattacharyya overlap ``sum_m sqrt(p(m) q(m))`` for ``m >= start``.

    ``start=1`` reproduces a sum that omits the vacuum bin; the default
    keeps it so identical distributions score exactly one.
    """
    if start not in (0, 1):
        raise ParameterDomainError("start must be 0 or 1")
    p = _as_probabilities(p, "p")
    q = _as_probabilities(q, "q")
    size = min(p.size, q.size)
    # mass beyond the common length pairs with zeros and adds nothing
    terms = np.sqrt(p[start:size] * q[start:size])
    return min(math.fsum(terms), 1.0)


def theory_model(calib: CalibrationResult, mean_electrons: float) -> PhotonNumberModel:
    """Photoelectron distribution implied by the fit, at the given mean."""
    if calib.family == "poisson":
        return Poisson(mean_electrons)
    if calib.family == "multimode_thermal":
        if calib.mu is None:
            raise ParameterDomainError("calibration has no mode number for a thermal theory")
        return MultimodeThermal(mean_electrons, max(calib.mu, 1.0))
    if calib.family == "binomial":
        if calib.binomial_n is None:
            raise ParameterDomainError("calibration has no binomial size")
        n = max(int(round(calib.binomial_n)), math.ceil(mean_electrons + 1e-9), 1)
        return BinomialSource(n, mean_electrons / n)
    raise ParameterDomainError(f"unknown theory family {calib.family!r}")


@dataclass
class Reconstruction:
    histogram: ElectronHistogram
    fidelity: float
    theory: PhotonNumberModel
    theory_pmf: np.ndarray = field(repr=False)
    mean_electrons: float
    params: dict[str, Any] = field(default_factory=dict)


def reconstruct_and_score(run: AttenuationRun, calib: CalibrationResult,
                          model: PhotonNumberModel | None = None,
                          start: int = 0) -> Reconstruction:
    """Rebin a run with the fitted gain and score it against theory.

    By default the theory is the calibrated family evaluated at the measured
    mean ``vbar/alpha`` (and the fitted mode number for thermal light).  An
    explicit ``model`` overrides this and is used as given.
    """
    if not calib.alpha > 0:
        raise ParameterDomainError(f"calibration alpha must be > 0, got {calib.alpha}")
    hist = rebin(run, calib.alpha)
    mean_electrons = float(run.samples.mean()) / calib.alpha
    theory = model if model is not None else theory_model(calib, mean_electrons)
    n_max = max(theory.support_max(), hist.counts.size - 1)
    q = theory.pmf_table(n_max)
    f = fidelity(hist, q, start=start)
    params = {"alpha": calib.alpha, "mean_electrons": mean_electrons, **theory.to_dict()}
    return Reconstruction(hist, f, theory, q, mean_electrons, params)

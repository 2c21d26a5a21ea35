"""
Self-consistent gain calibration from the Fano-factor line.

For any light state measured at several attenuations, the voltage Fano
factor is linear in the mean voltage,

    F_v = (Q / nbar) * vbar + alpha,

so a straight-line fit over the attenuation series yields the gain
``alpha`` as intercept and the state parameter ``Q/nbar`` as slope.
For multimode thermal light the slope is ``1/mu``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .detection import AttenuationRun
from .errors import (DegenerateDesignError, FitError, InsufficientDataError,
                     ParameterDomainError)
from .estimation import DEFAULT_BOOTSTRAP_ROUNDS, FanoPoint, fano_point

POISSONIAN = "poissonian"
SUPER_POISSONIAN = "super_poissonian"
SUB_POISSONIAN = "sub_poissonian"
CLASSIFICATIONS = (POISSONIAN, SUPER_POISSONIAN, SUB_POISSONIAN)
MODEL_HINTS = ("auto", "coherent", "thermal")
DEFAULT_Z = 2.0

# theory family used for reconstruction, keyed by classification
_FAMILY_BY_CLASS = {
    POISSONIAN: "poisson",
    SUPER_POISSONIAN: "multimode_thermal",
    SUB_POISSONIAN: "binomial",
}


class CalibrationWarning(UserWarning):
    """The fitted line contradicts the assumed statistics."""


@dataclass(frozen=True)
class FanoLine:
    """Weighted least-squares fit of ``fv`` on ``vbar``.

    ``covariance`` is ordered (slope, intercept) and uses the absolute
    per-point errors, i.e. it is not rescaled by the reduced chi-square.
    """

    slope: float
    intercept: float
    covariance: np.ndarray = field(repr=False)
    chi2: float
    dof: int
    ols_slope: float
    ols_intercept: float

    @property
    def se_slope(self) -> float:
        return math.sqrt(self.covariance[0, 0])

    @property
    def se_intercept(self) -> float:
        return math.sqrt(self.covariance[1, 1])

    def predict(self, vbar):
        return self.slope * np.asarray(vbar) + self.intercept


def fit_fano_line(points: Sequence[FanoPoint]) -> FanoLine:
    """Fit ``F_v = slope * vbar + intercept`` with weights ``1/se_fv**2``."""
    if len(points) < 3:
        raise InsufficientDataError(f"line fit needs >= 3 Fano points, got {len(points)}")
    x = np.array([p.vbar for p in points], dtype=np.float64)
    y = np.array([p.fv for p in points], dtype=np.float64)
    se = np.array([p.se_fv for p in points], dtype=np.float64)
    if np.any(~(se > 0)):
        raise ParameterDomainError("every Fano point needs se_fv > 0 for weighting")
    if np.unique(x).size < 2:
        raise DegenerateDesignError("all mean voltages are equal; slope is undetermined")

    w = 1.0 / se**2
    sw = w.sum()
    xw = (w @ x) / sw
    yw = (w @ y) / sw
    dx = x - xw
    sxx = w @ (dx * dx)
    if not sxx > 0:
        raise DegenerateDesignError("weighted spread of mean voltages is zero")
    slope = (w @ (dx * (y - yw))) / sxx
    intercept = yw - slope * xw
    var_slope = 1.0 / sxx
    cov = np.array([[var_slope, -xw * var_slope],
                    [-xw * var_slope, 1.0 / sw + xw * xw * var_slope]])
    resid = y - (slope * x + intercept)
    chi2 = float(w @ (resid * resid))

    # unweighted fit, reported only as a diagnostic
    ols_slope, ols_intercept = np.polyfit(x, y, 1)
    return FanoLine(float(slope), float(intercept), cov, chi2, len(points) - 2,
                    float(ols_slope), float(ols_intercept))


def classify(slope: float, se_slope: float, z_threshold: float = DEFAULT_Z) -> str:
    """Sign test on the fitted slope at ``z_threshold`` standard errors."""
    if not se_slope > 0:
        raise ParameterDomainError(f"se_slope must be > 0, got {se_slope}")
    if slope > z_threshold * se_slope:
        return SUPER_POISSONIAN
    if slope < -z_threshold * se_slope:
        return SUB_POISSONIAN
    return POISSONIAN


@dataclass
class CalibrationResult:
    """Outcome of a calibration.

    ``alpha`` is always the intercept of the unconstrained line.  Under the
    coherent hint, ``alpha_constrained`` additionally holds the weighted mean
    of the Fano factors (slope fixed at zero).  ``mu`` is filled only for a
    thermal reading of a positive slope; ``binomial_n`` only for a
    sub-Poissonian one.
    """

    alpha: float
    se_alpha: float
    slope: float
    se_slope: float
    classification: str
    family: str
    chi2: float
    dof: int
    covariance: list[list[float]]
    model_hint: str = "auto"
    z_threshold: float = DEFAULT_Z
    mu: float | None = None
    se_mu: float | None = None
    binomial_n: float | None = None
    alpha_constrained: float | None = None
    se_alpha_constrained: float | None = None
    ols_slope: float | None = None
    ols_intercept: float | None = None
    points: list[FanoPoint] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        out = {k: getattr(self, k) for k in self.__dataclass_fields__ if k != "points"}
        out["points"] = [p.to_dict() for p in self.points]
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "CalibrationResult":
        data = dict(data)
        data["points"] = [FanoPoint.from_dict(p) for p in data.get("points", [])]
        return cls(**data)


def calibrate(runs: Sequence[AttenuationRun], model_hint: str = "auto",
              z_threshold: float = DEFAULT_Z,
              bootstrap_rounds: int = DEFAULT_BOOTSTRAP_ROUNDS) -> CalibrationResult:
    """Blind calibration of an attenuation series.

    Only the voltage samples are used; the detector parameters that
    generated them are never consulted.

    Parameters
    ----------
    runs : sequence of AttenuationRun
        At least three runs of the same light state.
    model_hint : {"auto", "coherent", "thermal"}
        ``auto`` classifies by the slope sign and then extracts the matching
        parameters.  ``thermal`` always reports ``mu = 1/slope`` when the slope
        is positive; ``coherent`` adds the zero-slope estimate of alpha.
    """
    if model_hint not in MODEL_HINTS:
        raise ParameterDomainError(f"model_hint must be one of {MODEL_HINTS}, got {model_hint!r}")
    if len(runs) < 3:
        raise InsufficientDataError(f"calibration needs >= 3 runs, got {len(runs)}")
    if len({r.transmittance for r in runs}) < 2:
        raise DegenerateDesignError("runs must span at least two distinct attenuations")

    points = [fano_point(r, bootstrap_rounds) for r in runs]
    line = fit_fano_line(points)
    cls = classify(line.slope, line.se_slope, z_threshold)
    notes = []

    result = CalibrationResult(
        alpha=line.intercept, se_alpha=line.se_intercept,
        slope=line.slope, se_slope=line.se_slope,
        classification=cls, family=_FAMILY_BY_CLASS[cls],
        chi2=line.chi2, dof=line.dof, covariance=line.covariance.tolist(),
        model_hint=model_hint, z_threshold=z_threshold,
        ols_slope=line.ols_slope, ols_intercept=line.ols_intercept,
        points=points,
    )

    if model_hint == "coherent":
        result.family = "poisson"
        w = np.array([1.0 / p.se_fv**2 for p in points])
        fv = np.array([p.fv for p in points])
        result.alpha_constrained = float(w @ fv / w.sum())
        result.se_alpha_constrained = float(1.0 / math.sqrt(w.sum()))
        if cls != POISSONIAN:
            notes.append(f"coherent hint but slope {line.slope:.4g} +/- {line.se_slope:.2g} "
                         f"is significant at z={z_threshold:g} ({cls})")
    elif model_hint == "thermal":
        result.family = "multimode_thermal"
        if cls != SUPER_POISSONIAN:
            notes.append(f"thermal hint but fit classifies as {cls}")

    if result.family == "multimode_thermal":
        if line.slope > 0:
            result.mu = 1.0 / line.slope
            result.se_mu = line.se_slope / line.slope**2
            if result.mu < 1:
                notes.append(f"fitted mode number {result.mu:.3g} is below 1")
        else:
            notes.append("nonpositive slope; mode number undefined")
    elif result.family == "binomial":
        result.binomial_n = -1.0 / line.slope

    if not result.alpha > 0:
        raise FitError(f"fitted alpha {result.alpha:.4g} V is not positive")
    for note in notes:
        warnings.warn(note, CalibrationWarning, stacklevel=2)
    result.warnings = notes
    return result

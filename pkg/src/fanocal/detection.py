"""
Detection chain: Bernoulli photodetection followed by linear amplification.

Exact pmf transforms (``thin_pmf``, ``voltage_pmf``) sit next to the Monte
Carlo generator (``simulate_run``) so either can serve as the oracle for
the other.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import special

from .distributions import PhotonNumberModel
from .errors import ParameterDomainError, UnsupportedConfigurationError


@dataclass(frozen=True)
class DetectorChain:
    """Simulated instrument.

    Attributes
    ----------
    eta : float
        Intrinsic quantum efficiency in (0, 1].
    alpha : float
        Gain-conversion factor, volts per photoelectron.
    sigma1 : float
        Gaussian spread of the single-photoelectron peak, volts.
    sigma_dark : float
        Width of the zero-mean dark/electronic noise, volts.
    """

    eta: float
    alpha: float
    sigma1: float = 0.0
    sigma_dark: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.eta <= 1.0):
            raise ParameterDomainError(f"eta must lie in (0, 1], got {self.eta}")
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise ParameterDomainError(f"alpha must be > 0, got {self.alpha}")
        if self.sigma1 < 0 or self.sigma_dark < 0:
            raise ParameterDomainError("noise widths must be >= 0")

    @property
    def noiseless(self) -> bool:
        return self.sigma1 == 0 and self.sigma_dark == 0

    def to_dict(self):
        return {"eta": self.eta, "alpha": self.alpha,
                "sigma1": self.sigma1, "sigma_dark": self.sigma_dark}

    @classmethod
    def from_dict(cls, data):
        try:
            return cls(**data)
        except TypeError as exc:
            raise ParameterDomainError(f"bad detector chain parameters: {exc}") from None


@dataclass
class AttenuationRun:
    """Voltage samples recorded at one filter transmittance.

    Samples are dark-subtracted, so with noise they may dip below zero.
    """

    transmittance: float
    samples: np.ndarray
    label: str = ""

    def __post_init__(self):
        if not (0.0 < self.transmittance <= 1.0):
            raise ParameterDomainError(
                f"transmittance must lie in (0, 1], got {self.transmittance}")
        self.samples = np.asarray(self.samples, dtype=np.float64).ravel()
        if not self.label:
            self.label = f"t={self.transmittance:g}"

    def __len__(self):
        return self.samples.size


@dataclass(frozen=True)
class VoltagePmf:
    """Electron-number pmf placed on the voltage grid ``v = alpha * m``."""

    probabilities: np.ndarray = field(repr=False)
    alpha: float

    @property
    def voltages(self) -> np.ndarray:
        return self.alpha * np.arange(self.probabilities.size)


def _check_eta(eta_eff):
    if not (0.0 < eta_eff <= 1.0):
        raise ParameterDomainError(f"effective efficiency must lie in (0, 1], got {eta_eff}")


def thin_pmf(photon_pmf, eta_eff: float) -> np.ndarray:
    """Photoelectron pmf from a photon pmf by direct Bernoulli thinning.

    Evaluates ``P_el(m) = sum_{n>=m} C(n, m) eta^m (1-eta)^(n-m) P_ph(n)`` over
    the support of ``photon_pmf``.  The output has the same length as the
    input; each photon number contributes a full binomial row, so the total
    mass is preserved.
    """
    _check_eta(eta_eff)
    p_ph = np.asarray(photon_pmf, dtype=np.float64)
    if eta_eff == 1.0:
        return p_ph.copy()

    size = p_ph.size
    out = np.zeros(size)
    log_eta, log_loss = math.log(eta_eff), math.log1p(-eta_eff)
    m_all = np.arange(size, dtype=np.float64)
    lg_m = special.gammaln(m_all + 1)
    for n in np.flatnonzero(p_ph):
        m = m_all[: n + 1]
        log_row = (special.gammaln(n + 1.0) - lg_m[: n + 1] - lg_m[n::-1]
                   + m * log_eta + (n - m) * log_loss)
        out[: n + 1] += p_ph[n] * np.exp(log_row)
    return out


def electron_moments(photon_mean: float, photon_var: float, eta_eff: float) -> tuple[float, float]:
    """Mean and variance of the photoelectron count after thinning."""
    _check_eta(eta_eff)
    mean = eta_eff * photon_mean
    var = eta_eff**2 * photon_var + eta_eff * (1.0 - eta_eff) * photon_mean
    return mean, var


def voltage_pmf(model: PhotonNumberModel, chain: DetectorChain,
                transmittance: float = 1.0) -> VoltagePmf:
    """Exact output distribution of a noiseless chain.

    Uses the closed-form thinning of each model family, which keeps this path
    independent of :func:`thin_pmf`.
    """
    if not chain.noiseless:
        raise UnsupportedConfigurationError(
            "exact voltage pmf is only defined for a noiseless chain")
    eta_eff = chain.eta * transmittance
    _check_eta(eta_eff)
    return VoltagePmf(model.thinned(eta_eff).pmf_table(), chain.alpha)


def simulate_run(model: PhotonNumberModel, chain: DetectorChain, transmittance: float,
                 count: int, rng: np.random.Generator, label: str = "") -> AttenuationRun:
    """Monte Carlo realization of one attenuation setting.

    Per shot: draw ``n`` photons, keep ``m ~ Binomial(n, eta*t)``
    photoelectrons, and emit ``alpha*m`` volts.  With noise, each electron
    contributes ``Normal(alpha, sigma1)`` and the shot gets an extra
    ``Normal(0, sigma_dark)``; the electron sum is drawn directly as
    ``Normal(alpha*m, sigma1*sqrt(m))``.
    """
    if count < 1:
        raise ParameterDomainError("count must be >= 1")
    eta_eff = chain.eta * transmittance
    _check_eta(eta_eff)
    photons = model.sample(rng, count)
    electrons = rng.binomial(photons, eta_eff)
    if chain.noiseless:
        volts = chain.alpha * electrons
    else:
        volts = rng.normal(chain.alpha * electrons, chain.sigma1 * np.sqrt(electrons))
        volts = volts + rng.normal(0.0, chain.sigma_dark, size=count)
    return AttenuationRun(transmittance, volts, label)


def run_seed(master_seed: int, index: int) -> np.random.SeedSequence:
    """Sub-seed for run ``index``: ``SeedSequence(master_seed, spawn_key=(index,))``.

    This is exactly the child that ``SeedSequence(master_seed).spawn`` would
    produce at position ``index``, so serial and parallel generation agree.
    """
    return np.random.SeedSequence(master_seed, spawn_key=(index,))


def simulate_runs(model: PhotonNumberModel, chain: DetectorChain,
                  transmittances: Sequence[float], count: int, master_seed: int,
                  jobs: int = 1) -> list[AttenuationRun]:
    """Simulate a whole attenuation series, ordered as ``transmittances``."""

    def one(index):
        rng = np.random.default_rng(run_seed(master_seed, index))
        t = transmittances[index]
        return simulate_run(model, chain, t, count, rng, label=f"run{index:03d}_t{t:.4f}")

    indices = range(len(transmittances))
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(one, indices))
    return [one(i) for i in indices]

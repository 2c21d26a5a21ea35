"""Self-consistent gain calibration and photoelectron statistics for linear photodetectors."""

__version__ = "0.1.0"

from .calibration import CalibrationResult, calibrate, classify, fit_fano_line
from .detection import (AttenuationRun, DetectorChain, electron_moments, simulate_run,
                        simulate_runs, thin_pmf, voltage_pmf)
from .distributions import BinomialSource, MultimodeThermal, PhotonNumberModel, Poisson
from .estimation import FanoPoint, estimate_moments, fano_point
from .reconstruction import ElectronHistogram, fidelity, rebin, reconstruct_and_score

__all__ = [
    "AttenuationRun", "BinomialSource", "CalibrationResult", "DetectorChain",
    "ElectronHistogram", "FanoPoint", "MultimodeThermal", "PhotonNumberModel", "Poisson",
    "calibrate", "classify", "electron_moments", "estimate_moments", "fano_point",
    "fidelity", "fit_fano_line", "rebin", "reconstruct_and_score", "simulate_run",
    "simulate_runs", "thin_pmf", "voltage_pmf",
]

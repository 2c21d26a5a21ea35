"""
Static figures for the ``report`` command.

Figures are built on :class:`matplotlib.figure.Figure` directly, without
pyplot, so rendering is headless and holds no global state.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from .calibration import CalibrationResult
from .detection import AttenuationRun
from .reconstruction import Reconstruction

RC = {
    "figsize": (5.0, 3.6),
    "dpi": 120,
}


def _new_figure():
    fig = Figure(figsize=RC["figsize"], dpi=RC["dpi"])
    FigureCanvasAgg(fig)
    return fig, fig.add_subplot(111)


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(Path(path), metadata={"Software": None})
    return Path(path)


def plot_fano_line(calib: CalibrationResult, path, title: str = ""):
    """F_v against mean voltage with error bars and the fitted line."""
    fig, ax = _new_figure()
    vbar = np.array([p.vbar for p in calib.points])
    fv = np.array([p.fv for p in calib.points])
    ax.errorbar(vbar, fv, xerr=[p.se_vbar for p in calib.points],
                yerr=[p.se_fv for p in calib.points], fmt="o", ms=4, capsize=2, label="data")
    grid = np.linspace(0.0, vbar.max() * 1.05, 50)
    label = f"fit: alpha={calib.alpha:.4f}({calib.se_alpha * 1e4:.0f}) V"
    if calib.mu is not None:
        label += f", mu={calib.mu:.2f}"
    ax.plot(grid, calib.slope * grid + calib.alpha, "-", lw=1, label=label)
    ax.set_xlabel("mean voltage (V)")
    ax.set_ylabel("F_v (V)")
    ax.set_xlim(left=0)
    ax.legend(fontsize=8, frameon=False)
    if title:
        ax.set_title(title, fontsize=9)
    return _save(fig, path)


def plot_reconstruction(rec: Reconstruction, path, title: str = ""):
    """Measured photoelectron histogram (bars) with the theory overlaid."""
    fig, ax = _new_figure()
    probs = rec.histogram.probabilities
    m = np.arange(probs.size)
    ax.bar(m, probs, width=0.8, color="0.75", label="reconstructed")
    upper = max(probs.size, int(np.searchsorted(np.cumsum(rec.theory_pmf), 1 - 1e-4)) + 1)
    mt = np.arange(min(upper, rec.theory_pmf.size))
    ax.plot(mt, rec.theory_pmf[mt], "o", ms=3, color="C3", label=f"theory ({rec.theory.kind})")
    ax.set_xlabel("photoelectrons m")
    ax.set_ylabel("probability")
    ax.set_xlim(-0.8, mt.size + 0.5)
    ax.legend(fontsize=8, frameon=False, title=f"f = {rec.fidelity:.4f}", title_fontsize=8)
    if title:
        ax.set_title(title, fontsize=9)
    return _save(fig, path)


def plot_pulse_height(runs: Sequence[AttenuationRun], path, bins: int = 200):
    """Pulse-height spectra of every run on a common voltage axis."""
    fig, ax = _new_figure()
    lo = min(float(r.samples.min()) for r in runs)
    hi = max(float(np.quantile(r.samples, 0.999)) for r in runs)
    edges = np.linspace(lo, hi, bins + 1)
    for r in runs:
        counts, _ = np.histogram(r.samples, bins=edges)
        ax.step(edges[:-1], counts / r.samples.size, where="post", lw=0.8,
                label=f"t={r.transmittance:g}")
    ax.set_xlabel("output voltage (V)")
    ax.set_ylabel("fraction of shots")
    ax.set_yscale("log")
    ax.legend(fontsize=6, frameon=False, ncol=2)
    return _save(fig, path)


def plot_linearity(runs: Sequence[AttenuationRun], path):
    """Mean output voltage against filter transmittance."""
    fig, ax = _new_figure()
    t = np.array([r.transmittance for r in runs])
    v = np.array([r.samples.mean() for r in runs])
    ax.plot(t, v, "s", ms=4)
    slope, intercept = np.polyfit(t, v, 1)
    grid = np.linspace(0, 1, 20)
    ax.plot(grid, slope * grid + intercept, "-", lw=1, label=f"slope {slope:.3f} V")
    ax.set_xlabel("transmittance")
    ax.set_ylabel("mean voltage (V)")
    ax.legend(fontsize=8, frameon=False)
    return _save(fig, path)

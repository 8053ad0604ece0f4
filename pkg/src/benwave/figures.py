"""Figure rendering for run reports.

Everything here writes PNG files through the Agg backend so runs work on
headless machines.  Figures are a convenience layer over the delimited
output; the CSV and snapshot files remain the primary artifacts.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .evolution import Trajectory
from .spectral import RealField, forward
from .waves import Branch, SolitaryWave

__all__ = [
    "save_profile_figure",
    "save_branch_figure",
    "save_evolution_figure",
    "save_series_figure",
]

_DPI = 130


def save_profile_figure(field: RealField | SolitaryWave, path: str | Path, title: str = "") -> Path:
    """Nodal profile next to its spectral magnitude on a log axis."""
    if isinstance(field, SolitaryWave):
        if not title:
            title = f"c = {field.velocity:.6g}"
        field = field.profile
    path = Path(path)
    coeffs = forward(field).coeffs
    k = field.grid.wavenumbers
    order = np.argsort(k)

    fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(9.0, 3.4))
    ax0.plot(field.grid.nodes, field.values, lw=1.2)
    ax0.set_xlabel("x")
    ax0.set_ylabel("u")
    ax0.grid(alpha=0.3)
    mag = np.abs(coeffs[order])
    ax1.semilogy(k[order], np.maximum(mag, 1e-20), lw=0.8)
    ax1.set_xlabel("k")
    ax1.set_ylabel("|u_k|")
    ax1.grid(alpha=0.3)
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def save_branch_figure(branch: Branch, path: str | Path) -> Path:
    """Peak amplitude and boundary tail along the continuation branch."""
    path = Path(path)
    values = np.asarray(branch.values())
    peaks = np.array([np.max(np.abs(w.profile.values)) for w in branch.waves()])
    tails = np.array([w.boundary_tail for w in branch.waves()])

    fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(9.0, 3.4))
    ax0.plot(values, peaks, "o-", ms=3, lw=1.0)
    ax0.set_xlabel(branch.parameter)
    ax0.set_ylabel("peak |Q|")
    ax0.grid(alpha=0.3)
    ax1.semilogy(values, np.maximum(tails, 1e-20), "o-", ms=3, lw=1.0)
    ax1.set_xlabel(branch.parameter)
    ax1.set_ylabel("boundary tail")
    ax1.grid(alpha=0.3)
    fig.suptitle(f"branch over {branch.parameter} ({branch.termination.value})")
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def save_evolution_figure(traj: Trajectory, path: str | Path, max_traces: int = 12) -> Path:
    """Stacked snapshots (bottom to top in time) over the spatial domain."""
    path = Path(path)
    snaps = traj.snapshots
    if len(snaps) > max_traces:
        idx = np.unique(np.round(np.linspace(0, len(snaps) - 1, max_traces)).astype(int))
        snaps = [snaps[i] for i in idx]
    amp = max(float(np.max(np.abs(f.values))) for _, f in snaps)
    offset = 1.5 * amp if amp > 0 else 1.0

    fig, ax = plt.subplots(figsize=(7.0, 0.6 * len(snaps) + 2.0))
    x = traj.grid.nodes
    for i, (t, f) in enumerate(snaps):
        ax.plot(x, f.values + i * offset, lw=0.9)
        ax.annotate(f"t = {t:.4g}", (x[0], i * offset + 0.25 * amp), fontsize=8)
    ax.set_xlabel("x")
    ax.set_yticks([])
    ax.set_title("evolution snapshots")
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def save_series_figure(traj: Trajectory, path: str | Path) -> Path:
    """Diagnostics vs time: sup norm, conservation drifts, spectral tail."""
    path = Path(path)
    t = traj.times
    fig, axes = plt.subplots(2, 2, figsize=(9.0, 6.0), sharex=True)
    (ax0, ax1), (ax2, ax3) = axes
    ax0.plot(t, traj.linf, lw=1.0)
    ax0.set_ylabel("max |u|")
    ax1.semilogy(t, np.maximum(np.abs(traj.energy_rel_drift), 1e-20), lw=1.0)
    ax1.set_ylabel("|energy drift|")
    ax2.semilogy(t, np.maximum(np.abs(traj.mass_rel_drift), 1e-20), lw=1.0)
    ax2.set_ylabel("|mass drift|")
    ax2.set_xlabel("t")
    ax3.semilogy(t, np.maximum(traj.spectral_tail, 1e-20), lw=1.0)
    ax3.set_ylabel("spectral tail")
    ax3.set_xlabel("t")
    for ax in (ax0, ax1, ax2, ax3):
        ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path

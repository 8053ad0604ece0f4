"""Post-processing: plateau detection, spectral energy splits, structure tracking.

These operate on evolution output (L-infinity series, snapshots) and close
the loop between time integration and the traveling-wave solver: the leading
coherent hump of a run can be windowed out, its speed estimated from peak
tracking, and the pair handed back to Newton iteration for confirmation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .evolution import Trajectory
from .models import Model
from .spectral import RealField
from .waves import SolitaryWave, SolverConfig, newton_krylov_solve

__all__ = [
    "plateau_detect",
    "radiation_split",
    "RadiationSplit",
    "spectral_decay_certificate",
    "extract_leading_structure",
    "resolve_leading_structure",
    "count_sign_changes",
    "ReportCheck",
    "RunReport",
]


def plateau_detect(series: np.ndarray, window_fraction: float = 0.25, rel_tol: float = 0.05) -> bool:
    """Decide whether a positive diagnostic series has leveled off.

    The trailing ``window_fraction`` of the samples is fit by a straight
    line; the verdict is true when the fitted total variation across the
    window is below ``rel_tol`` relative to the window mean.  This measures
    the trend of the oscillation envelope without being fooled by bounded
    oscillations, and is invariant under positive scaling of the series and
    shifts in time.
    """
    series = np.asarray(series, dtype=float)
    if not 0 < window_fraction <= 1:
        raise ValueError("window_fraction must be in (0, 1]")
    if series.ndim != 1 or series.size < 10.0 / window_fraction:
        raise ValueError(
            f"series too short for plateau detection: need >= {10.0 / window_fraction:.0f} samples"
        )
    m = max(4, int(round(window_fraction * series.size)))
    w = series[-m:]
    mean = float(np.mean(w))
    if mean == 0:
        return bool(np.all(w == 0))
    idx = np.arange(m, dtype=float)
    slope = float(np.polyfit(idx, w, 1)[0])
    variation = abs(slope) * (m - 1) / abs(mean)
    return variation <= rel_tol


@dataclass(frozen=True)
class RadiationSplit:
    """Spectral energy on either side of the phase-velocity sign change."""

    k_star: float
    left_energy: float    # |k| < k_star: phase velocity < 0 (left-going)
    right_energy: float   # |k| >= k_star: phase velocity >= 0 (right-going)

    @property
    def total(self) -> float:
        return self.left_energy + self.right_energy

    @property
    def left_share(self) -> float:
        return self.left_energy / self.total

    @property
    def right_share(self) -> float:
        return self.right_energy / self.total


def radiation_split(u: RealField, k_star: float) -> RadiationSplit:
    """Partition ``\\int u^2`` spectrally at ``|k| = k_star``.

    The two parts sum to the total spectral energy exactly (same Parseval
    normalization as elsewhere).  ``k_star`` beyond the grid maximum gives a
    degenerate split and is allowed but warned about by the caller.
    """
    if not k_star > 0:
        raise ValueError("k_star must be positive")
    grid = u.grid
    uh = np.abs(np.fft.fft(u.values) / grid.n_modes) ** 2
    kabs = np.abs(grid.wavenumbers)
    left = kabs < k_star
    period = grid.domain_length
    left_energy = period * float(np.sum(uh[left]))
    right_energy = period * float(np.sum(uh[~left]))
    return RadiationSplit(k_star=k_star, left_energy=left_energy, right_energy=right_energy)


def spectral_decay_certificate(u: RealField, threshold: float = 1e-10) -> bool:
    """True when the top decile of |k| carries coefficients below
    ``threshold`` relative to the largest coefficient (resolution check)."""
    grid = u.grid
    uh = np.abs(np.fft.fft(u.values) / grid.n_modes)
    peak = float(np.max(uh))
    if peak == 0:
        return True
    kabs = np.abs(grid.wavenumbers)
    sel = kabs >= 0.9 * float(np.max(kabs))
    return float(np.max(uh[sel])) <= threshold * peak


def count_sign_changes(u: RealField, rel_floor: float = 1e-6) -> int:
    """Number of sign alternations of the profile, ignoring sub-floor values."""
    v = u.values
    peak = float(np.max(np.abs(v)))
    if peak == 0:
        return 0
    s = np.sign(np.where(np.abs(v) >= rel_floor * peak, v, 0.0))
    s = s[s != 0]
    return int(np.sum(s[1:] * s[:-1] < 0))


def _refine_peak(x: np.ndarray, mag: np.ndarray, j: int, spacing: float) -> float:
    """Sub-grid peak location by parabolic fit through three points."""
    n = mag.size
    y0, y1, y2 = mag[(j - 1) % n], mag[j], mag[(j + 1) % n]
    denom = y0 - 2.0 * y1 + y2
    if denom == 0:
        return x[j]
    shift = 0.5 * (y0 - y2) / denom
    return x[j] + np.clip(shift, -1.0, 1.0) * spacing


def _track_speed(traj: Trajectory, fraction: float = 0.25) -> float:
    """Leading-peak speed from the last ``fraction`` of snapshots.

    Peak positions are refined parabolically and unwrapped across the
    periodic boundary before the linear regression.
    """
    snaps = traj.snapshots
    m = max(3, int(round(fraction * len(snaps))))
    snaps = snaps[-m:]
    grid = traj.grid
    half_period = 0.5 * grid.domain_length
    ts, xs = [], []
    for t, f in snaps:
        mag = np.abs(f.values)
        j = int(np.argmax(mag))
        ts.append(t)
        xs.append(_refine_peak(grid.nodes, mag, j, grid.spacing))
    xs = np.asarray(xs)
    # unwrap jumps across the periodic boundary
    for i in range(1, xs.size):
        d = xs[i] - xs[i - 1]
        if d > half_period:
            xs[i:] -= grid.domain_length
        elif d < -half_period:
            xs[i:] += grid.domain_length
    return float(np.polyfit(np.asarray(ts), xs, 1)[0])


def extract_leading_structure(
    traj: Trajectory, taper_fraction: float = 0.10
) -> tuple[RealField, float]:
    """Window out the highest-amplitude coherent hump of the final state.

    The hump is bounded by the nearest flanking minima of |u| on each side
    and blended to zero with a cosine taper over ``taper_fraction`` of the
    window width.  Returns the windowed field (on the full grid) and the
    speed estimated from peak tracking over the trailing snapshots.
    Requires at least two snapshots; raises ValueError otherwise, or when
    the final state has no peak above the noise floor.
    """
    if len(traj.snapshots) < 2:
        raise ValueError("need at least two snapshots to estimate a speed")
    u = traj.final_state()
    grid = traj.grid
    mag = np.abs(u.values)
    peak = float(np.max(mag))
    if peak <= 0 or peak < 1e-12:
        raise ValueError("no coherent structure found (flat final state)")
    j = int(np.argmax(mag))
    n = grid.n_modes

    # walk outward from the peak to the flanking minima of |u|
    def walk(direction: int) -> int:
        i = j
        for _ in range(n - 1):
            nxt = (i + direction) % n
            if mag[nxt] > mag[i]:
                break
            i = nxt
        return i

    lo = walk(-1)
    hi = walk(+1)
    width = (hi - lo) % n
    if width < 4:
        raise ValueError("leading hump narrower than four grid points")

    idx = (lo + np.arange(width + 1)) % n
    window = np.zeros(n)
    taper = max(2, int(round(taper_fraction * (width + 1))))
    prof = np.ones(width + 1)
    ramp = 0.5 * (1.0 - np.cos(np.pi * np.arange(taper) / taper))
    prof[:taper] = ramp
    prof[-taper:] = ramp[::-1]
    window[idx] = prof

    speed = _track_speed(traj)
    return RealField(grid, u.values * window), speed


def resolve_leading_structure(
    traj: Trajectory,
    model: Model | None = None,
    config: SolverConfig | None = None,
) -> tuple[SolitaryWave, float]:
    """Extract the leading hump and confirm it against the traveling-wave solver.

    The windowed hump is recentered (integer roll of its peak to x = 0) and
    used as the Newton seed at the tracked speed.  Returns the converged
    wave together with the speed estimate.
    """
    model = model or traj.model
    windowed, speed = extract_leading_structure(traj)
    vals = windowed.values
    j = int(np.argmax(np.abs(vals)))
    center = int(np.argmin(np.abs(windowed.grid.nodes)))
    seed = RealField(windowed.grid, np.roll(vals, center - j))
    wave = newton_krylov_solve(model, speed, seed, config)
    return wave, speed


@dataclass(frozen=True)
class ReportCheck:
    """One recorded threshold comparison; ``op`` is '<=', '>=' or 'bool'."""

    name: str
    value: float
    threshold: float
    op: str
    passed: bool

    @staticmethod
    def compare(name: str, value, threshold, op: str) -> "ReportCheck":
        if op == "<=":
            ok = value <= threshold
        elif op == ">=":
            ok = value >= threshold
        elif op == "bool":
            ok = bool(value) == bool(threshold)
        else:
            raise ValueError(f"unknown comparison {op!r}")
        return ReportCheck(name=name, value=float(value), threshold=float(threshold), op=op, passed=bool(ok))


@dataclass
class RunReport:
    """Structured experiment outcome: configuration echo, scalar summary,
    threshold checks, and the artifact files the run produced."""

    name: str
    kind: str
    config: dict
    summary: dict = field(default_factory=dict)
    checks: list[ReportCheck] = field(default_factory=list)
    artifacts: list[str] = field(default_factory=list)

    def add_check(self, name: str, value, threshold, op: str) -> ReportCheck:
        check = ReportCheck.compare(name, value, threshold, op)
        self.checks.append(check)
        return check

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

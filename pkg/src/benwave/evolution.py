"""Fourth-order exponential time differencing (ETDRK4) for the evolution form.

The semilinear system ``u_hat_t = L u_hat + N(u_hat)`` with diagonal stiff
linear part is advanced by the Cox-Matthews ETDRK4 scheme.  The phi-function
stage weights are evaluated by averaging over 32 points on the unit circle
around each ``L(k) dt``, which handles the removable singularities at
``L = 0`` without special-casing; a doubled-count consistency check guards
the quadrature at precompute time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .models import Model, linear_multiplier, nonlocal_symbol
from .spectral import Grid, RealField, multiplier_values

__all__ = [
    "EtdCoefficients",
    "precompute_coefficients",
    "step",
    "evolve",
    "Trajectory",
    "BlowUpError",
]

BLOWUP_LINF = 1e6
DEFAULT_SNAPSHOT_STRIDE = 100
_CONTOUR_POINTS = 32
_CONTOUR_RADIUS = 1.0


class BlowUpError(RuntimeError):
    """Solution left the finite range; carries the partial trajectory."""

    def __init__(self, message, time, trajectory=None):
        super().__init__(message)
        self.time = time
        self.trajectory = trajectory


@dataclass(frozen=True, eq=False)
class EtdCoefficients:
    """Per-mode exponential integrators and Cox-Matthews stage weights."""

    dt: float
    linear: np.ndarray   # L(k), purely imaginary
    e_full: np.ndarray   # exp(L dt)
    e_half: np.ndarray   # exp(L dt / 2)
    q: np.ndarray        # dt * phi_1(L dt / 2), the internal stage weight
    f1: np.ndarray
    f2: np.ndarray
    f3: np.ndarray


def _contour_weights(z0: np.ndarray, dt: float, n_points: int) -> tuple[np.ndarray, ...]:
    # Mean over a unit circle about each z0; the integrands are entire, so
    # the mean equals the value at the center up to quadrature error.
    theta = np.exp(1j * np.pi * (np.arange(n_points) + 0.5) / (n_points / 2.0))
    z = z0[:, None] + _CONTOUR_RADIUS * theta[None, :]
    ez = np.exp(z)
    q = dt * np.mean((np.exp(z / 2.0) - 1.0) / z, axis=1)
    z3 = z**3
    f1 = dt * np.mean((-4.0 - z + ez * (4.0 - 3.0 * z + z * z)) / z3, axis=1)
    f2 = dt * np.mean((2.0 + z + ez * (z - 2.0)) / z3, axis=1)
    f3 = dt * np.mean((-4.0 - 3.0 * z - z * z + ez * (4.0 - z)) / z3, axis=1)
    return q, f1, f2, f3


def precompute_coefficients(model: Model, grid: Grid, dt: float) -> EtdCoefficients:
    """Evaluate the ETDRK4 coefficient arrays for a model, grid and step size.

    The contour averages are recomputed with twice the point count and must
    agree to 1e-10; disagreement indicates an unusable (dt, grid) combination
    and raises rather than silently degrading the order.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    lin = multiplier_values(grid, lambda k: linear_multiplier(model, k))
    z0 = lin * dt
    q, f1, f2, f3 = _contour_weights(z0, dt, _CONTOUR_POINTS)
    q2, f12, f22, f32 = _contour_weights(z0, dt, 2 * _CONTOUR_POINTS)
    drift = max(
        float(np.max(np.abs(a - b))) for a, b in ((q, q2), (f1, f12), (f2, f22), (f3, f32))
    )
    if drift > 1e-10 * max(dt, 1.0):
        raise RuntimeError(f"contour quadrature unstable (doubling drift {drift:.3e})")
    return EtdCoefficients(
        dt=dt,
        linear=lin,
        e_full=np.exp(z0),
        e_half=np.exp(z0 / 2.0),
        q=q,
        f1=f1,
        f2=f2,
        f3=f3,
    )


def _make_nonlinear(grid: Grid, dealias: bool):
    half_deriv = 0.5 * grid.deriv_symbol
    n = grid.n_modes
    mask = None
    if dealias:
        from .spectral import dealias_mask

        mask = dealias_mask(grid)

    def nonlin(u_hat: np.ndarray) -> np.ndarray:
        if mask is not None:
            u_hat = np.where(mask, u_hat, 0.0)
        u = np.fft.ifft(u_hat * n).real
        out = -half_deriv * (np.fft.fft(u * u) / n)
        if mask is not None:
            out = np.where(mask, out, 0.0)
        return out

    return nonlin


def step(u_hat: np.ndarray, coeffs: EtdCoefficients, nonlin) -> np.ndarray:
    """One Cox-Matthews ETDRK4 step on raw coefficient arrays."""
    n1 = nonlin(u_hat)
    a = coeffs.e_half * u_hat + coeffs.q * n1
    n2 = nonlin(a)
    b = coeffs.e_half * u_hat + coeffs.q * n2
    n3 = nonlin(b)
    c = coeffs.e_half * a + coeffs.q * (2.0 * n3 - n1)
    n4 = nonlin(c)
    return coeffs.e_full * u_hat + coeffs.f1 * n1 + 2.0 * coeffs.f2 * (n2 + n3) + coeffs.f3 * n4


@dataclass(eq=False)
class Trajectory:
    """Evolution record: per-step diagnostic series plus strided snapshots."""

    model: Model
    grid: Grid
    dt: float
    times: np.ndarray
    linf: np.ndarray
    energy_rel_drift: np.ndarray
    mass_rel_drift: np.ndarray
    momentum_rel_drift: np.ndarray
    spectral_tail: np.ndarray
    snapshots: list[tuple[float, RealField]]
    energy0: float
    mass0: float
    momentum0: float

    def final_state(self) -> RealField:
        return self.snapshots[-1][1]


def _rel_denominator(x0: float) -> float:
    return abs(x0) if abs(x0) > 1e-12 else 1.0


def evolve(
    u0: RealField,
    model: Model,
    t_end: float,
    n_steps: int,
    snapshot_stride: int = DEFAULT_SNAPSHOT_STRIDE,
    dealias: bool = False,
    coefficients: EtdCoefficients | None = None,
) -> Trajectory:
    """Advance initial data to ``t_end`` in ``n_steps`` ETDRK4 steps.

    Snapshots are stored every ``snapshot_stride`` steps (plus the initial
    and final states); the diagnostic series carry one row per step.  A
    non-finite state or an infinity norm above ``1e6`` raises
    :class:`BlowUpError` with the partial trajectory attached.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    if snapshot_stride < 1:
        raise ValueError("snapshot_stride must be >= 1")
    grid = u0.grid
    dt = t_end / n_steps
    coeffs = coefficients or precompute_coefficients(model, grid, dt)
    if abs(coeffs.dt - dt) > 1e-15 * max(1.0, abs(dt)):
        raise ValueError("supplied coefficients were computed for a different dt")
    nonlin = _make_nonlinear(grid, dealias)

    n = grid.n_modes
    period = grid.domain_length
    kabs = np.abs(grid.wavenumbers)
    tail_sel = kabs >= 0.9 * float(np.max(kabs))
    ksq = np.abs(grid.deriv_symbol) ** 2
    quad_w = 0.5 * model.beta * ksq - 0.5 * model.alpha * nonlocal_symbol(model, grid.wavenumbers)

    def energy_of(u_vals, u_hat):
        # same functional as models.energy, reusing the coefficients at hand
        power = u_hat.real**2 + u_hat.imag**2
        return period * float(np.sum(quad_w * power)) + float(np.sum(u_vals**3)) * grid.spacing / 6.0

    times = np.empty(n_steps + 1)
    linf = np.empty(n_steps + 1)
    e_drift = np.empty(n_steps + 1)
    m_drift = np.empty(n_steps + 1)
    p_drift = np.empty(n_steps + 1)
    tail = np.empty(n_steps + 1)
    snapshots: list[tuple[float, RealField]] = []

    u_hat = np.fft.fft(u0.values) / n
    e0 = energy_of(u0.values, u_hat)
    m0 = period * u_hat[0].real
    p0 = 0.5 * period * float(np.sum(u_hat.real**2 + u_hat.imag**2))
    e_den, m_den, p_den = _rel_denominator(e0), _rel_denominator(m0), _rel_denominator(p0)

    def record(i: int, t: float, u_vals: np.ndarray, u_hat: np.ndarray) -> float:
        times[i] = t
        amp = float(np.max(np.abs(u_vals)))
        linf[i] = amp
        power = u_hat.real**2 + u_hat.imag**2
        e_drift[i] = (energy_of(u_vals, u_hat) - e0) / e_den
        m_drift[i] = (period * u_hat[0].real - m0) / m_den
        p_drift[i] = (0.5 * period * float(np.sum(power)) - p0) / p_den
        tail[i] = float(np.sqrt(np.max(power[tail_sel])))
        if i % snapshot_stride == 0 or i == n_steps:
            snapshots.append((t, RealField(grid, u_vals)))
        return amp

    record(0, 0.0, u0.values.copy(), u_hat)
    for i in range(1, n_steps + 1):
        u_hat = step(u_hat, coeffs, nonlin)
        t = i * dt
        u_vals = np.fft.ifft(u_hat * n).real
        if not np.all(np.isfinite(u_vals)):
            partial = _partial_trajectory(
                model, grid, dt, i, times, linf, e_drift, m_drift, p_drift, tail,
                snapshots, e0, m0, p0,
            )
            raise BlowUpError(f"non-finite state at t = {t:.6g}", t, partial)
        amp = record(i, t, u_vals, u_hat)
        if amp > BLOWUP_LINF:
            partial = _partial_trajectory(
                model, grid, dt, i + 1, times, linf, e_drift, m_drift, p_drift, tail,
                snapshots, e0, m0, p0,
            )
            raise BlowUpError(f"amplitude {amp:.3e} exceeds {BLOWUP_LINF:.0e} at t = {t:.6g}", t, partial)

    return Trajectory(
        model=model,
        grid=grid,
        dt=dt,
        times=times,
        linf=linf,
        energy_rel_drift=e_drift,
        mass_rel_drift=m_drift,
        momentum_rel_drift=p_drift,
        spectral_tail=tail,
        snapshots=snapshots,
        energy0=e0,
        mass0=m0,
        momentum0=p0,
    )


def _partial_trajectory(model, grid, dt, filled, times, linf, e_drift, m_drift, p_drift, tail,
                        snapshots, e0, m0, p0) -> Trajectory:
    return Trajectory(
        model=model,
        grid=grid,
        dt=dt,
        times=times[:filled].copy(),
        linf=linf[:filled].copy(),
        energy_rel_drift=e_drift[:filled].copy(),
        mass_rel_drift=m_drift[:filled].copy(),
        momentum_rel_drift=p_drift[:filled].copy(),
        spectral_tail=tail[:filled].copy(),
        snapshots=snapshots,
        energy0=e0,
        mass0=m0,
        momentum0=p0,
    )

"""Solitary and periodic traveling waves by matrix-free Newton-Krylov iteration.

A traveling profile ``u(x, t) = Q(x - c t)`` satisfies, after one
integration with decay,

    (beta k^2 - alpha sigma(k) - c) Q_k + (1/2) (Q^2)_k = 0

for each wavenumber.  The solver iterates this algebraic system in Fourier
space: plain (inexact) Newton with GMRES on the directional Jacobian

    h -> (beta k^2 - alpha sigma(k) - c) h_k + (Q h)_k,

preconditioned by the inverse of the diagonal linear part.  There is no
phase condition; even seeds keep the translation mode out of the Krylov
space in practice.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Sequence

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from .models import Family, Model, PohozaevResiduals, energy, nonlocal_symbol, pohozaev_residuals
from .spectral import Grid, RealField, SpectralField, forward, inverse, tilbert_symbol

__all__ = [
    "SolverConfig",
    "TraceControl",
    "SolitaryWave",
    "Branch",
    "Termination",
    "ExistenceClass",
    "TailFit",
    "NewtonDivergedError",
    "NonexistenceError",
    "NotClassifiableError",
    "kdv_soliton",
    "bo_soliton",
    "effective_kdv_seed",
    "residual",
    "newton_krylov_solve",
    "trace_branch",
    "periodic_traveling_wave",
    "existence_guard",
    "tail_classify",
    "spectral_tail",
    "boundary_tail",
]


class NewtonDivergedError(RuntimeError):
    """Newton iteration failed; carries the residual history and last iterate."""

    def __init__(self, message, history=None, last_iterate=None):
        super().__init__(message)
        self.history = list(history or [])
        self.last_iterate = last_iterate


class NonexistenceError(RuntimeError):
    """Requested velocity lies in the proven nonexistence window."""


class NotClassifiableError(RuntimeError):
    """Profile tail cannot be classified (not decayed at the boundary)."""


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-10              # infinity norm of the spectral residual
    max_iter: int = 30
    gmres_restart: int = 30
    gmres_rtol: float = 1e-3        # inexact Newton inner tolerance
    gmres_max_inner: int = 200

    def gmres_cycles(self) -> int:
        return max(1, self.gmres_max_inner // self.gmres_restart)


@dataclass(frozen=True)
class TraceControl:
    min_relative_step: float = 1e-4
    delocalization_threshold: float = 1e-8


class Termination(str, Enum):
    COMPLETED = "completed"
    DELOCALIZED = "delocalized"
    NEWTON_DIVERGED = "newton_diverged"


class ExistenceClass(str, Enum):
    KNOWN_EXISTS = "known_exists"
    OPEN_WINDOW = "open_window"
    NONEXISTENT = "nonexistent"


@dataclass(frozen=True, eq=False)
class SolitaryWave:
    profile: RealField
    velocity: float
    model: Model
    residual_norm: float
    newton_iterations: int
    spectral_tail: float
    boundary_tail: float
    energy: float
    pohozaev: PohozaevResiduals | None
    integration_constant: float | None = None  # mean-zero periodic solutions only


@dataclass
class Branch:
    parameter: str
    points: list[tuple[float, SolitaryWave]]
    termination: Termination
    failure_value: float | None = None

    def values(self) -> list[float]:
        return [p for p, _ in self.points]

    def waves(self) -> list[SolitaryWave]:
        return [w for _, w in self.points]


@dataclass(frozen=True)
class TailFit:
    kind: str                    # "algebraic" or "exponential"
    constant_or_rate: float      # x^2 Q -> C, or decay rate rho
    algebraic_misfit: float
    exponential_misfit: float


# ---------------------------------------------------------------------------
# seeds


def _sech_sq(a: np.ndarray) -> np.ndarray:
    # 4 e^{-2|a|} / (1 + e^{-2|a|})^2, overflow-free for any argument
    e = np.exp(-2.0 * np.abs(a))
    return 4.0 * e / (1.0 + e) ** 2


def kdv_soliton(grid: Grid, c: float, beta: float) -> RealField:
    """``3c sech^2((x/2) sqrt(-c/beta))``; requires c < 0, beta > 0."""
    if not (c < 0 and beta > 0):
        raise ValueError(f"kdv soliton needs c < 0 and beta > 0, got c={c}, beta={beta}")
    arg = 0.5 * np.sqrt(-c / beta) * grid.nodes
    return RealField(grid, 3.0 * c * _sech_sq(arg))


def bo_soliton(grid: Grid, c: float) -> RealField:
    """``4c / (1 + c^2 x^2)``; requires c > 0."""
    if not c > 0:
        raise ValueError(f"bo soliton needs c > 0, got c={c}")
    x = grid.nodes
    return RealField(grid, 4.0 * c / (1.0 + (c * x) ** 2))


def effective_kdv_seed(model: Model, c: float, grid: Grid) -> RealField:
    """Long-wave sech^2 seed with the model's effective local dispersion.

    For finite-depth families the nonlocal symbol behaves like
    ``delta k^2 / 3`` at long waves, so the traveling equation is
    approximately local with coefficient ``b = beta - alpha*delta/3``; the
    corresponding sech^2 profile is a good Newton seed where no closed-form
    solitary wave is available.  Falls back to the exact closed forms for
    the local and deep-water families.
    """
    fam = model.family
    if fam is Family.KDV or (fam is Family.BENJAMIN and model.alpha == 0):
        return kdv_soliton(grid, c, model.beta)
    if fam is Family.BO:
        return bo_soliton(grid, c)
    if fam in (Family.ILW, Family.ILW_BENJAMIN):
        b_eff = model.beta - model.alpha * model.delta / 3.0
    elif fam is Family.MILW_BENJAMIN:
        b_eff = model.beta - model.alpha * (model.delta1 + model.delta2) / 3.0
    else:
        raise ValueError(f"no long-wave seed for family {fam.value} with alpha > 0")
    if not (-c / b_eff) > 0:
        raise ValueError(
            f"long-wave seed undefined: c={c} and effective dispersion {b_eff} have the same sign"
        )
    arg = 0.5 * np.sqrt(-c / b_eff) * grid.nodes
    return RealField(grid, 3.0 * c * _sech_sq(arg))


# ---------------------------------------------------------------------------
# residual and Newton-GMRES core


def traveling_symbol(model: Model, grid: Grid, c: float) -> np.ndarray:
    """Diagonal linear part ``beta k^2 - alpha sigma(k) - c`` (real, even)."""
    k = grid.wavenumbers
    return model.beta * k * k - model.alpha * nonlocal_symbol(model, k) - c


def residual(model: Model, Q: SpectralField, c: float) -> SpectralField:
    """Spectral residual of the integrated traveling-wave equation."""
    grid = Q.grid
    lsym = traveling_symbol(model, grid, c)
    q = np.fft.ifft(Q.coeffs * grid.n_modes).real
    res = lsym * Q.coeffs + 0.5 * np.fft.fft(q * q) / grid.n_modes
    return SpectralField(grid, res)


def _clamped_inverse(diag: np.ndarray) -> np.ndarray:
    floor = 1e-12 * float(np.max(np.abs(diag))) + 1e-300
    safe = np.where(np.abs(diag) < floor, floor, diag)
    return 1.0 / safe


def _newton_gmres(
    x_hat: np.ndarray,
    residual_fn: Callable[[np.ndarray], np.ndarray],
    jacobian_fn: Callable[[np.ndarray], Callable[[np.ndarray], np.ndarray]],
    precond_diag: np.ndarray,
    cfg: SolverConfig,
) -> tuple[np.ndarray, int, list[float]]:
    """Shared inexact-Newton driver.  Returns (solution, iterations, history)."""
    n = x_hat.size
    inv_diag = _clamped_inverse(precond_diag)
    M = LinearOperator((n, n), matvec=lambda v: inv_diag * v, dtype=complex)

    r = residual_fn(x_hat)
    rnorm = float(np.max(np.abs(r)))
    history = [rnorm]
    iterations = 0
    while rnorm > cfg.tol:
        if not np.isfinite(rnorm) or rnorm > 1e8 * max(1.0, history[0]):
            raise NewtonDivergedError(
                f"Newton residual diverged ({rnorm:.3e})", history, x_hat
            )
        if iterations >= cfg.max_iter:
            raise NewtonDivergedError(
                f"Newton did not converge in {cfg.max_iter} iterations "
                f"(residual {rnorm:.3e})",
                history,
                x_hat,
            )
        jac_mv = jacobian_fn(x_hat)
        J = LinearOperator((n, n), matvec=jac_mv, dtype=complex)
        delta, info = gmres(
            J,
            r,
            rtol=cfg.gmres_rtol,
            atol=0.0,
            restart=cfg.gmres_restart,
            maxiter=cfg.gmres_cycles(),
            M=M,
        )
        if info < 0:
            raise NewtonDivergedError(f"GMRES breakdown (info={info})", history, x_hat)
        x_hat = x_hat - delta
        r = residual_fn(x_hat)
        rnorm = float(np.max(np.abs(r)))
        history.append(rnorm)
        iterations += 1
    return x_hat, iterations, history


def spectral_tail(Q: SpectralField) -> float:
    """Max coefficient magnitude over the top decile of |k|."""
    k = np.abs(Q.grid.wavenumbers)
    sel = k >= 0.9 * float(np.max(k))
    return float(np.max(np.abs(Q.coeffs[sel])))


def boundary_tail(u: RealField) -> float:
    """Max |Q| over the outermost 1% of nodes (split over both ends)."""
    n = u.grid.n_modes
    m = max(2, round(0.005 * n))
    v = u.values
    return float(max(np.max(np.abs(v[:m])), np.max(np.abs(v[-m:]))))


def existence_guard(model: Model, c: float) -> ExistenceClass:
    """Classify a requested velocity against the known existence windows.

    Applies to the deep-water two-parameter family with alpha, beta > 0:
    waves exist for ``c < -alpha^2/(4 beta)``, cannot exist for
    ``c > alpha^2/(5 beta)``, and the window in between is open.
    """
    if model.family is not Family.BENJAMIN or not (model.alpha > 0 and model.beta > 0):
        raise ValueError("existence windows are established for alpha, beta > 0 deep-water models")
    a2 = model.alpha**2
    if c < -a2 / (4.0 * model.beta):
        return ExistenceClass.KNOWN_EXISTS
    if c > a2 / (5.0 * model.beta):
        return ExistenceClass.NONEXISTENT
    return ExistenceClass.OPEN_WINDOW


def _wave_from_solution(
    model: Model, c: float, grid: Grid, x_hat: np.ndarray, iterations: int, rnorm: float
) -> SolitaryWave:
    Q = SpectralField(grid, x_hat)
    prof = inverse(Q)
    poho = None
    if model.family in (Family.BENJAMIN, Family.KDV, Family.BO):
        poho = pohozaev_residuals(model, prof, c)
    return SolitaryWave(
        profile=prof,
        velocity=c,
        model=model,
        residual_norm=rnorm,
        newton_iterations=iterations,
        spectral_tail=spectral_tail(Q),
        boundary_tail=boundary_tail(prof),
        energy=energy(model, prof),
        pohozaev=poho,
    )


def newton_krylov_solve(
    model: Model,
    c: float,
    seed: RealField,
    config: SolverConfig | None = None,
    force: bool = False,
) -> SolitaryWave:
    """Solve for a solitary traveling wave of the given model and velocity.

    Consults the existence windows for the deep-water family: a velocity in
    the proven nonexistence range raises :class:`NonexistenceError` unless
    ``force`` is set, and the open window only warns.  ``c = 0`` is allowed
    with a warning (the linear part is then singular at k = 0).
    """
    cfg = config or SolverConfig()
    grid = seed.grid
    if model.family is Family.BENJAMIN and model.alpha > 0 and model.beta > 0:
        cls = existence_guard(model, c)
        if cls is ExistenceClass.NONEXISTENT and not force:
            raise NonexistenceError(
                f"nonexistence window: c={c} > alpha^2/(5 beta) = "
                f"{model.alpha**2 / (5 * model.beta):.6g}"
            )
        if cls is ExistenceClass.OPEN_WINDOW:
            warnings.warn(
                f"velocity c={c} lies in the open existence window "
                f"(-alpha^2/4beta, alpha^2/5beta); proceeding",
                stacklevel=2,
            )
    if c == 0:
        warnings.warn("c = 0 requested; the linear part is singular at k = 0", stacklevel=2)

    lsym = traveling_symbol(model, grid, c)
    n = grid.n_modes

    def residual_fn(x_hat):
        q = np.fft.ifft(x_hat * n).real
        return lsym * x_hat + 0.5 * np.fft.fft(q * q) / n

    def jacobian_fn(x_hat):
        q = np.fft.ifft(x_hat * n).real

        def matvec(h_hat):
            h = np.fft.ifft(h_hat * n).real
            return lsym * h_hat + np.fft.fft(q * h) / n

        return matvec

    x0 = forward(seed).coeffs
    x_hat, iterations, history = _newton_gmres(x0, residual_fn, jacobian_fn, lsym, cfg)
    return _wave_from_solution(model, c, grid, x_hat, iterations, history[-1])


def trace_branch(
    start: SolitaryWave,
    parameter: str,
    targets: Sequence[float],
    control: TraceControl | None = None,
    config: SolverConfig | None = None,
) -> Branch:
    """Continue a solitary wave through a monotone list of parameter values.

    Each target is solved with the previous profile as seed; on Newton
    failure the step toward the target is bisected, down to a minimum
    relative step, before the branch is abandoned.  A converged wave whose
    boundary tail exceeds the delocalization threshold ends the branch with
    status ``delocalized`` (that point is kept: it is a converged critical
    point, just not a localized one).
    """
    ctl = control or TraceControl()
    cfg = config or SolverConfig()
    if parameter not in ("alpha", "beta", "delta", "delta1", "delta2", "c"):
        raise ValueError(f"cannot trace in parameter {parameter!r}")
    targets = [float(t) for t in targets]
    start_value = start.velocity if parameter == "c" else getattr(start.model, parameter)
    if start_value is None:
        raise ValueError(f"start wave has no value for parameter {parameter!r}")
    seq = [start_value] + targets
    diffs = np.diff(seq)
    if len(targets) == 0 or not (np.all(diffs > 0) or np.all(diffs < 0)):
        raise ValueError("targets must be strictly monotone away from the start value")

    def solve_at(value: float, seed: RealField) -> SolitaryWave:
        if parameter == "c":
            return newton_krylov_solve(start.model, value, seed, cfg)
        model = start.model.with_parameter(parameter, value)
        return newton_krylov_solve(model, start.velocity, seed, cfg)

    points: list[tuple[float, SolitaryWave]] = [(start_value, start)]
    if start.boundary_tail > ctl.delocalization_threshold:
        return Branch(parameter, points, Termination.DELOCALIZED, failure_value=start_value)

    current = start
    current_value = start_value
    for target in targets:
        entry_gap = abs(target - current_value)
        min_step = ctl.min_relative_step * max(entry_gap, 1e-12)
        attempt = target
        while True:
            try:
                wave = solve_at(attempt, current.profile)
                # Newton can fall onto the trivial zero solution, which is a
                # critical point but never the continuation of a nontrivial
                # branch; treat that like a failed step and shorten it
                if np.max(np.abs(wave.profile.values)) < 1e-3 * np.max(
                    np.abs(current.profile.values)
                ):
                    raise NewtonDivergedError(
                        f"step to {parameter} = {attempt} collapsed onto the zero solution"
                    )
            except NewtonDivergedError:
                attempt = current_value + 0.5 * (attempt - current_value)
                if abs(attempt - current_value) < min_step:
                    return Branch(
                        parameter, points, Termination.NEWTON_DIVERGED, failure_value=target
                    )
                continue
            current, current_value = wave, attempt
            if current.boundary_tail > ctl.delocalization_threshold:
                points.append((current_value, current))
                return Branch(
                    parameter, points, Termination.DELOCALIZED, failure_value=current_value
                )
            if attempt == target:
                points.append((target, current))
                break
            attempt = target
    return Branch(parameter, points, Termination.COMPLETED)


def periodic_traveling_wave(
    model: Model,
    l: float,
    c: float,
    seed: RealField,
    config: SolverConfig | None = None,
) -> SolitaryWave:
    """Mean-zero periodic traveling wave of the finite-depth profile equation

        phi'' - l T_delta phi + (1/2) phi^2 - c phi = A,

    where ``T_delta`` is the periodic Tilbert operator (symbol
    ``k coth(delta k)``) and the constant ``A`` equals half the mean of
    ``phi^2`` for mean-zero ``phi``.  The k = 0 component of the system is
    replaced by the mean-zero constraint, which makes ``A`` implicit; the
    returned wave records it in ``integration_constant``.
    """
    cfg = config or SolverConfig()
    if model.delta is None or not model.delta > 0:
        raise ValueError("periodic traveling waves need a finite-depth model with delta > 0")
    grid = seed.grid
    n = grid.n_modes
    k = grid.wavenumbers
    lsym = -(k * k) - l * tilbert_symbol(k, model.delta) - c

    def residual_fn(x_hat):
        phi = np.fft.ifft(x_hat * n).real
        r = lsym * x_hat + 0.5 * np.fft.fft(phi * phi) / n
        r[0] = x_hat[0]
        return r

    def jacobian_fn(x_hat):
        phi = np.fft.ifft(x_hat * n).real

        def matvec(h_hat):
            h = np.fft.ifft(h_hat * n).real
            r = lsym * h_hat + np.fft.fft(phi * h) / n
            r[0] = h_hat[0]
            return r

        return matvec

    precond = lsym.copy()
    precond[0] = 1.0
    x0 = forward(seed).coeffs
    x0[0] = 0.0  # project the seed onto mean zero
    x_hat, iterations, history = _newton_gmres(x0, residual_fn, jacobian_fn, precond, cfg)

    Q = SpectralField(grid, x_hat)
    prof = inverse(Q)
    a_const = 0.5 * float(np.mean(prof.values**2))
    return SolitaryWave(
        profile=prof,
        velocity=c,
        model=model,
        residual_norm=history[-1],
        newton_iterations=iterations,
        spectral_tail=spectral_tail(Q),
        boundary_tail=boundary_tail(prof),
        energy=energy(model, prof),
        pohozaev=None,
        integration_constant=a_const,
    )


def tail_classify(wave: SolitaryWave, decay_rel_threshold: float = 1e-2) -> TailFit:
    """Classify the far-field decay of a localized profile.

    Fits ``log|Q|`` against ``log x`` (algebraic: slope -2, constant
    ``x^2 Q -> C``) and against ``x`` (exponential: rate rho) over the outer
    20% of the usable right half-domain, where usable means above the
    roundoff floor ``1e-14 * peak``.  The fit with the smaller rms misfit in
    log space wins.  Raises :class:`NotClassifiableError` when the profile
    has not decayed at the boundary (relative to ``decay_rel_threshold``).
    """
    v = wave.profile.values
    x = wave.profile.grid.nodes
    peak = float(np.max(np.abs(v)))
    if peak == 0:
        raise NotClassifiableError("zero profile")
    if wave.boundary_tail > decay_rel_threshold * peak:
        raise NotClassifiableError(
            f"profile not decayed at boundary (tail {wave.boundary_tail:.3e}, peak {peak:.3e})"
        )
    right = x > 0
    xs, q = x[right], v[right]
    floor = max(1e-14 * peak, 1e-280)
    usable = np.abs(q) >= floor
    if int(np.sum(usable)) < 8:
        raise NotClassifiableError("too few points above the roundoff floor")
    x_end = float(np.max(xs[usable]))
    window = usable & (xs >= 0.8 * x_end)
    if int(np.sum(window)) < 8:
        idx = np.flatnonzero(usable)[-8:]
        window = np.zeros_like(usable)
        window[idx] = True
    xw, qw = xs[window], q[window]
    y = np.log(np.abs(qw))

    def rms_linfit(t):
        coef = np.polyfit(t, y, 1)
        return float(np.sqrt(np.mean((y - np.polyval(coef, t)) ** 2))), coef

    alg_misfit, _ = rms_linfit(np.log(xw))
    exp_misfit, exp_coef = rms_linfit(xw)
    if alg_misfit <= exp_misfit:
        c_est = float(np.mean(xw * xw * qw))
        return TailFit("algebraic", c_est, alg_misfit, exp_misfit)
    return TailFit("exponential", -float(exp_coef[0]), alg_misfit, exp_misfit)

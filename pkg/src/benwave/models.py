"""Model families of Benjamin type and their conserved functionals.

All families share the evolution form ``u_t = L u + N(u)`` in Fourier
variables, with

* linear symbol ``L(k) = i k (alpha * sigma(k) - beta * k^2)``,
* nonlinearity ``N(u) = -(i k / 2) * (u^2)^`` (from ``u_t + u u_x + ... = 0``),

where ``sigma`` is the family's nonlocal dispersion symbol: ``|k|`` for the
deep-water families, ``k*coth(delta*k) - 1/delta`` for finite depth, the sum
of two such terms for the two-depth variant, zero for the purely local case.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .spectral import (
    Grid,
    RealField,
    SpectralField,
    forward,
    hilbert_symbol,
    integrate,
    multiplier_values,
    tilbert_symbol,
)

__all__ = [
    "Family",
    "Model",
    "nonlocal_symbol",
    "linear_multiplier",
    "phase_velocity",
    "critical_wavenumber",
    "nonlinear_term",
    "mass",
    "momentum",
    "energy",
    "ConservedSet",
    "conserved_set",
    "pohozaev_residuals",
    "PohozaevResiduals",
]


class Family(str, Enum):
    BENJAMIN = "benjamin"
    KDV = "kdv"
    BO = "bo"
    ILW = "ilw"
    ILW_BENJAMIN = "ilw_benjamin"
    MILW_BENJAMIN = "milw_benjamin"


_NEEDS_DELTA = {Family.ILW, Family.ILW_BENJAMIN}


@dataclass(frozen=True)
class Model:
    """Equation parameters: family plus (alpha, beta) and depth parameters."""

    family: Family
    alpha: float = 0.0
    beta: float = 0.0
    delta: float | None = None
    delta1: float | None = None
    delta2: float | None = None

    def __post_init__(self):
        fam = self.family
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be nonnegative")
        if fam in _NEEDS_DELTA and not (self.delta is not None and self.delta > 0):
            raise ValueError(f"{fam.value} requires delta > 0")
        if fam is Family.MILW_BENJAMIN and not (
            self.delta1 is not None and self.delta1 > 0 and self.delta2 is not None and self.delta2 > 0
        ):
            raise ValueError("milw_benjamin requires delta1, delta2 > 0")
        if fam is Family.KDV and self.alpha != 0:
            raise ValueError("kdv has no nonlocal term; alpha must be 0")
        if fam in (Family.KDV, Family.BENJAMIN, Family.ILW_BENJAMIN, Family.MILW_BENJAMIN) and self.beta == 0:
            raise ValueError(f"{fam.value} requires beta > 0")
        if fam in (Family.BO, Family.ILW):
            if self.beta != 0:
                raise ValueError(f"{fam.value} requires beta = 0")
            if self.alpha == 0:
                raise ValueError(f"{fam.value} requires alpha > 0")

    def with_parameter(self, name: str, value: float) -> "Model":
        if name not in ("alpha", "beta", "delta", "delta1", "delta2"):
            raise ValueError(f"unknown model parameter {name!r}")
        return replace(self, **{name: value})


def nonlocal_symbol(model: Model, k: np.ndarray) -> np.ndarray:
    """The family's dispersion symbol sigma(k); real, even, sigma(0) = 0."""
    k = np.asarray(k, dtype=float)
    fam = model.family
    if fam in (Family.BENJAMIN, Family.BO):
        return np.abs(k)
    if fam in (Family.ILW, Family.ILW_BENJAMIN):
        return tilbert_symbol(k, model.delta) - 1.0 / model.delta
    if fam is Family.MILW_BENJAMIN:
        return (
            tilbert_symbol(k, model.delta1)
            - 1.0 / model.delta1
            + tilbert_symbol(k, model.delta2)
            - 1.0 / model.delta2
        )
    return np.zeros_like(k)


def linear_multiplier(model: Model, k: np.ndarray) -> np.ndarray:
    """Symbol ``i k (alpha * sigma(k) - beta * k^2)``; purely imaginary and odd."""
    k = np.asarray(k, dtype=float)
    return 1j * k * (model.alpha * nonlocal_symbol(model, k) - model.beta * k * k)


def phase_velocity(model: Model, k: np.ndarray) -> np.ndarray:
    """Linear-wave phase velocity ``beta k^2 - alpha * sigma(k)``."""
    k = np.asarray(k, dtype=float)
    return model.beta * k * k - model.alpha * nonlocal_symbol(model, k)


def critical_wavenumber(model: Model) -> float:
    """Positive wavenumber where the phase velocity changes sign.

    For the deep-water symbol this is ``alpha / beta`` exactly; for the
    finite-depth families it is bracketed and bisected numerically.
    """
    if model.alpha == 0 or model.beta == 0:
        raise ValueError("phase velocity does not change sign unless alpha, beta > 0")
    if model.family in (Family.BENJAMIN, Family.BO):
        return model.alpha / model.beta

    def c_of(k):
        return float(phase_velocity(model, np.array([k]))[0])

    lo, hi = 1e-8, 1.0
    if c_of(2.0 * lo) >= 0:
        # the quadratic term dominates the nonlocal one all the way down to
        # k = 0 (e.g. ILW-type symbols with alpha*delta/3 <= beta), so every
        # mode is co-moving and there is no split wavenumber
        raise ValueError("phase velocity does not change sign for this model")
    while c_of(hi) < 0:
        hi *= 2.0
        if hi > 1e12:
            raise RuntimeError("no sign change found for phase velocity")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if c_of(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def nonlinear_term(model: Model, F: SpectralField, dealias: np.ndarray | None = None) -> SpectralField:
    """Fourier coefficients of ``-(u^2/2)_x`` for the field with spectrum F.

    ``dealias`` is an optional retained-mode mask (see
    :func:`benwave.spectral.dealias_mask`); by default no dealiasing is done.
    """
    grid = F.grid
    coeffs = F.coeffs
    if dealias is not None:
        coeffs = np.where(dealias, coeffs, 0.0)
    u = np.fft.ifft(coeffs * grid.n_modes).real
    quad = np.fft.fft(u * u) / grid.n_modes
    out = -0.5 * grid.deriv_symbol * quad
    if dealias is not None:
        out = np.where(dealias, out, 0.0)
    return SpectralField(grid, out)


def mass(u: RealField) -> float:
    """Integral of u over the period."""
    return integrate(u)


def momentum(u: RealField) -> float:
    """``(1/2) \\int u^2 dx``."""
    return 0.5 * float(np.sum(u.values**2)) * u.grid.spacing


def _spectral_weights(model: Model, grid: Grid):
    k = grid.wavenumbers
    ksq = np.abs(grid.deriv_symbol) ** 2  # k^2 with the Nyquist mode zeroed
    return k, ksq, nonlocal_symbol(model, k)


def energy(model: Model, u: RealField) -> float:
    """Hamiltonian ``\\int (beta/2 u_x^2 + u^3/6) dx - (alpha/2) \\int u K u dx``.

    ``K`` is the family's nonlocal operator with symbol sigma(k).  The
    quadratic terms are evaluated spectrally (Parseval), the cubic one by
    nodal quadrature.  The gradient term uses the Nyquist-zeroed derivative
    symbol for consistency with differentiation elsewhere.
    """
    grid = u.grid
    _, ksq, sigma = _spectral_weights(model, grid)
    uh = np.abs(np.fft.fft(u.values) / grid.n_modes) ** 2
    period = grid.domain_length
    quadratic = period * float(np.sum((0.5 * model.beta * ksq - 0.5 * model.alpha * sigma) * uh))
    cubic = float(np.sum(u.values**3)) * grid.spacing / 6.0
    return quadratic + cubic


@dataclass(frozen=True)
class ConservedSet:
    mass: float
    momentum: float
    energy: float


def conserved_set(model: Model, u: RealField) -> ConservedSet:
    return ConservedSet(mass=mass(u), momentum=momentum(u), energy=energy(model, u))


@dataclass(frozen=True)
class PohozaevResiduals:
    """Integral identities satisfied by localized traveling waves (deep-water form).

    r1: ``\\int (-c v^2 + beta v_x^2 - alpha |D^{1/2} v|^2 + v^3/2) dx``
    r2: ``\\int (c/2 v^2 + beta/2 v_x^2 - v^3/6) dx``
    r4: spectral form ``2 pi L sum (c/2 + 5 beta/2 k^2 - alpha |k|) |v_k|^2``

    The combination ``r4 = r1 + 3 r2`` holds for any field, solution or not.
    """

    r1: float
    r2: float
    r4: float
    norm_sq: float  # \int v^2 dx, the normalization used for "relative"

    def max_relative(self) -> float:
        scale = max(self.norm_sq, 1e-300)
        return max(abs(self.r1), abs(self.r2), abs(self.r4)) / scale


def pohozaev_residuals(model: Model, v: RealField, c: float) -> PohozaevResiduals:
    """Evaluate the three traveling-wave integral identities spectrally.

    Valid for the deep-water families (sigma = |k|); the identities are not
    established for the finite-depth symbols.
    """
    if model.family not in (Family.BENJAMIN, Family.KDV, Family.BO):
        raise ValueError("Pohozaev identities apply to the |k|-dispersion families only")
    grid = v.grid
    k, ksq, _ = _spectral_weights(model, grid)
    vh = np.abs(np.fft.fft(v.values) / grid.n_modes) ** 2
    period = grid.domain_length
    alpha, beta = model.alpha, model.beta

    int_v2 = period * float(np.sum(vh))
    int_vx2 = period * float(np.sum(ksq * vh))
    int_halfderiv = period * float(np.sum(np.abs(k) * vh))
    int_v3 = float(np.sum(v.values**3)) * grid.spacing

    r1 = -c * int_v2 + beta * int_vx2 - alpha * int_halfderiv + 0.5 * int_v3
    r2 = 0.5 * c * int_v2 + 0.5 * beta * int_vx2 - int_v3 / 6.0
    r4 = period * float(np.sum((0.5 * c + 2.5 * beta * ksq - alpha * np.abs(k)) * vh))
    return PohozaevResiduals(r1=r1, r2=r2, r4=r4, norm_sq=int_v2)


def hilbert_transform(F: SpectralField) -> SpectralField:
    """Periodic Hilbert transform (convenience wrapper)."""
    return SpectralField(F.grid, multiplier_values(F.grid, hilbert_symbol) * F.coeffs)

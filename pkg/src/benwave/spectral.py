"""Periodic Fourier grid, transforms, and multiplier symbols.

Conventions, fixed once for the whole package:

* The spatial domain is ``scale * [-pi, pi)`` sampled at ``n_modes``
  equispaced nodes, so the period is ``2*pi*scale``.
* Wavenumbers are ``j / scale`` for integer ``j`` in FFT-native order
  ``0, 1, ..., n/2 - 1, -n/2, ..., -1``.
* ``forward`` returns ``fft(values) / n_modes`` so coefficients carry the
  magnitude of Fourier-series coefficients.  Parseval then reads
  ``sum(|u_j|^2) * dx == 2*pi*scale * sum(|u_hat_k|^2)`` with
  ``dx = 2*pi*scale / n_modes``.
* The unpaired Nyquist mode ``k = -n/(2*scale)`` is special: applying an
  odd (purely imaginary) symbol there would break realness, so
  ``apply_multiplier`` keeps only the real part of any symbol on that
  mode.  Even real symbols pass through unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

__all__ = [
    "Grid",
    "RealField",
    "SpectralField",
    "make_grid",
    "forward",
    "inverse",
    "apply_multiplier",
    "multiplier_values",
    "hilbert_symbol",
    "tilbert_symbol",
    "integrate",
    "l2_norm_sq",
    "hermitian_defect",
    "translate",
    "dealias_mask",
]

# Below this the Tilbert symbol switches to its Taylor expansion to avoid 0/0.
_TILBERT_TAYLOR_CUTOFF = 1e-4


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform periodic grid on ``scale * [-pi, pi)`` with FFT-native wavenumbers."""

    n_modes: int
    scale: float
    nodes: np.ndarray
    wavenumbers: np.ndarray

    @property
    def spacing(self) -> float:
        return 2.0 * np.pi * self.scale / self.n_modes

    @property
    def domain_length(self) -> float:
        return 2.0 * np.pi * self.scale

    @property
    def nyquist_index(self) -> int:
        return self.n_modes // 2

    @cached_property
    def deriv_symbol(self) -> np.ndarray:
        """``ik`` with the Nyquist mode zeroed (odd symbol policy)."""
        ik = 1j * self.wavenumbers
        ik[self.nyquist_index] = 0.0
        ik.setflags(write=False)
        return ik

    def compatible(self, other: "Grid") -> bool:
        return self.n_modes == other.n_modes and self.scale == other.scale


@dataclass(frozen=True, eq=False)
class RealField:
    """Real nodal values bound to a grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (self.grid.n_modes,):
            raise ValueError(
                f"field has {self.values.shape} values, grid has {self.grid.n_modes} nodes"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field values must be finite")


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Complex Fourier coefficients bound to a grid, FFT-native ordering."""

    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self):
        if self.coeffs.shape != (self.grid.n_modes,):
            raise ValueError(
                f"field has {self.coeffs.shape} coefficients, grid has {self.grid.n_modes} modes"
            )


def make_grid(n_modes: int, scale: float) -> Grid:
    """Build a periodic grid with ``n_modes`` nodes on ``scale * [-pi, pi)``.

    ``n_modes`` must be even and at least 4 so the Nyquist mode is
    well-defined; ``scale`` must be positive.
    """
    if n_modes < 4 or n_modes % 2 != 0:
        raise ValueError(f"n_modes must be even and >= 4, got {n_modes}")
    if not scale > 0:
        raise ValueError(f"scale must be positive, got {scale}")
    j = np.arange(n_modes)
    nodes = scale * (-np.pi + 2.0 * np.pi * j / n_modes)
    # Integer indices j / scale, exactly representable as integer-over-scale.
    index = np.concatenate([np.arange(0, n_modes // 2), np.arange(-(n_modes // 2), 0)])
    wavenumbers = index / scale
    nodes.setflags(write=False)
    wavenumbers.setflags(write=False)
    return Grid(n_modes=n_modes, scale=float(scale), nodes=nodes, wavenumbers=wavenumbers)


def forward(f: RealField) -> SpectralField:
    """Forward transform, ``fft(values) / n`` normalization."""
    coeffs = np.fft.fft(f.values) / f.grid.n_modes
    return SpectralField(f.grid, coeffs)


def inverse(F: SpectralField) -> RealField:
    """Inverse transform back to nodal values.

    The imaginary residue is discarded; for Hermitian-symmetric input it is
    at roundoff level (asserted in the test suite, not here, to keep the
    operation usable on intermediate data).
    """
    values = np.fft.ifft(F.coeffs * F.grid.n_modes).real
    return RealField(F.grid, values)


def multiplier_values(grid: Grid, symbol: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Evaluate a symbol on the grid wavenumbers, applying the Nyquist policy.

    On the unpaired Nyquist mode only the real part of the symbol is kept:
    an odd purely imaginary symbol (ik, ik^3, -i*sgn k, ...) is therefore
    zeroed there, while even real symbols are untouched.
    """
    values = np.asarray(symbol(grid.wavenumbers), dtype=complex).copy()
    if values.shape != grid.wavenumbers.shape:
        raise ValueError("symbol must evaluate elementwise on the wavenumber array")
    ny = grid.nyquist_index
    values[ny] = values[ny].real
    return values


def apply_multiplier(F: SpectralField, symbol: Callable[[np.ndarray], np.ndarray]) -> SpectralField:
    """Apply a Fourier multiplier given as a function of the wavenumber."""
    return SpectralField(F.grid, multiplier_values(F.grid, symbol) * F.coeffs)


def hilbert_symbol(k: np.ndarray) -> np.ndarray:
    """Symbol of the periodic Hilbert transform, ``-i * sgn(k)`` with sgn(0) = 0."""
    return -1j * np.sign(k)


def tilbert_symbol(k: np.ndarray, delta: float) -> np.ndarray:
    """Symbol ``k * coth(delta * k)`` of the finite-depth (Tilbert) operator.

    The removable singularity at ``k = 0`` takes its limit ``1/delta``; for
    ``|delta*k| < 1e-4`` the Taylor expansion ``1/delta + delta*k^2/3`` is
    used to avoid cancellation.  The result is real, even, and bounded below
    by ``1/delta``.
    """
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    k = np.asarray(k, dtype=float)
    z = delta * k
    small = np.abs(z) < _TILBERT_TAYLOR_CUTOFF
    denom = np.where(small, 1.0, np.tanh(z))
    out = np.where(small, 1.0 / delta + delta * k * k / 3.0, k / denom)
    return out


def integrate(f: RealField) -> float:
    """Trapezoid quadrature over the period (exact for band-limited data)."""
    return float(np.sum(f.values)) * f.grid.spacing


def l2_norm_sq(f: RealField) -> float:
    """``\\int f^2 dx`` by nodal quadrature."""
    return float(np.sum(f.values**2)) * f.grid.spacing


def hermitian_defect(F: SpectralField) -> float:
    """Max deviation from the Hermitian symmetry that realness requires."""
    c = F.coeffs
    defect = np.abs(c - np.conj(np.roll(c[::-1], 1)))
    ny = F.grid.nyquist_index
    defect[ny] = abs(c[ny].imag)
    return float(np.max(defect))


def translate(f: RealField, shift: float) -> RealField:
    """Spectrally exact periodic translation ``f(x) -> f(x - shift)``."""
    F = forward(f)
    phase = np.exp(-1j * F.grid.wavenumbers * shift)
    ny = F.grid.nyquist_index
    phase[ny] = phase[ny].real  # keep the unpaired mode real
    return inverse(SpectralField(F.grid, F.coeffs * phase))


def dealias_mask(grid: Grid) -> np.ndarray:
    """Boolean 2/3-rule mask: True on retained modes."""
    k_max = grid.n_modes / (2.0 * grid.scale)
    return np.abs(grid.wavenumbers) < (2.0 / 3.0) * k_max

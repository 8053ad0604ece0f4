"""Fourier-spectral tools for nonlocal dispersive wave equations.

The package computes solitary and periodic traveling waves of Benjamin-type
and intermediate-long-wave-type equations by matrix-free Newton-Krylov
iteration with parameter continuation, evolves initial data with a
fourth-order exponential time-differencing scheme, and ships a declarative
experiment harness with named, reproducible configurations.
"""

from .config import ConfigError, ExperimentConfig, load_config, loads_config
from .diagnostics import (
    RadiationSplit,
    RunReport,
    count_sign_changes,
    extract_leading_structure,
    plateau_detect,
    radiation_split,
    resolve_leading_structure,
    spectral_decay_certificate,
)
from .evolution import BlowUpError, EtdCoefficients, Trajectory, evolve, precompute_coefficients
from .harness import list_experiments, run_experiment
from .io import read_snapshot, write_snapshot
from .models import (
    ConservedSet,
    Family,
    Model,
    PohozaevResiduals,
    conserved_set,
    critical_wavenumber,
    energy,
    hilbert_transform,
    linear_multiplier,
    mass,
    momentum,
    nonlocal_symbol,
    pohozaev_residuals,
)
from .spectral import (
    Grid,
    RealField,
    SpectralField,
    forward,
    hilbert_symbol,
    integrate,
    inverse,
    make_grid,
    tilbert_symbol,
    translate,
)
from .waves import (
    Branch,
    NewtonDivergedError,
    NonexistenceError,
    NotClassifiableError,
    SolitaryWave,
    SolverConfig,
    TailFit,
    Termination,
    TraceControl,
    bo_soliton,
    effective_kdv_seed,
    existence_guard,
    kdv_soliton,
    newton_krylov_solve,
    periodic_traveling_wave,
    tail_classify,
    trace_branch,
)

__version__ = "0.1.0"

__all__ = [
    "BlowUpError",
    "Branch",
    "ConfigError",
    "ConservedSet",
    "EtdCoefficients",
    "ExperimentConfig",
    "Family",
    "Grid",
    "Model",
    "NewtonDivergedError",
    "NonexistenceError",
    "NotClassifiableError",
    "PohozaevResiduals",
    "RadiationSplit",
    "RealField",
    "RunReport",
    "SolitaryWave",
    "SolverConfig",
    "SpectralField",
    "TailFit",
    "Termination",
    "TraceControl",
    "Trajectory",
    "bo_soliton",
    "conserved_set",
    "count_sign_changes",
    "critical_wavenumber",
    "effective_kdv_seed",
    "energy",
    "evolve",
    "existence_guard",
    "extract_leading_structure",
    "forward",
    "hilbert_symbol",
    "hilbert_transform",
    "integrate",
    "inverse",
    "kdv_soliton",
    "linear_multiplier",
    "list_experiments",
    "load_config",
    "loads_config",
    "make_grid",
    "mass",
    "momentum",
    "newton_krylov_solve",
    "nonlocal_symbol",
    "periodic_traveling_wave",
    "plateau_detect",
    "pohozaev_residuals",
    "precompute_coefficients",
    "radiation_split",
    "read_snapshot",
    "resolve_leading_structure",
    "run_experiment",
    "spectral_decay_certificate",
    "tail_classify",
    "tilbert_symbol",
    "trace_branch",
    "translate",
    "write_snapshot",
    "__version__",
]

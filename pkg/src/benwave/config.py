"""Experiment configuration files.

Experiments are described by INI files (stdlib ``configparser``).  A minimal
example::

    [meta]
    name = demo
    kind = solve_wave

    [model]
    family = benjamin
    alpha = 1.0
    beta = 1.0

    [grid]
    n_modes = 1024
    scale = 20

    [wave]
    c = -1.0
    seed = kdv_soliton

Target lists for branch tracing accept comma-separated tokens where each
token is either a single float or a ``start:stop:count`` linspace shorthand,
e.g. ``targets = 0.1, 0.2:1.8:17, 1.99``.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .models import Family, Model
from .waves import SolverConfig, TraceControl

__all__ = [
    "ConfigError",
    "WaveSpec",
    "BranchSpec",
    "InitialSpec",
    "EvolutionSpec",
    "ExperimentConfig",
    "load_config",
    "loads_config",
    "parse_targets",
]

KINDS = ("solve_wave", "trace_branch", "evolve", "stability_test", "resolution_test")

SEED_NAMES = ("auto", "kdv_soliton", "bo_soliton", "effective_kdv", "gaussian")


class ConfigError(Exception):
    """Raised for malformed or incomplete experiment configuration."""


@dataclass(frozen=True)
class WaveSpec:
    """Target wave plus (optionally) the continuation path used to reach it.

    When ``continue_from`` is set, the solve starts at that value of
    ``continue_parameter`` (where a good closed-form seed exists) and is
    traced in ``continue_steps`` even steps to the configured value.
    """

    c: float
    seed: str = "auto"
    force: bool = False
    seed_amplitude: float | None = None
    seed_width: float | None = None
    continue_from: float | None = None
    continue_parameter: str = "alpha"
    continue_steps: int = 12


@dataclass(frozen=True)
class BranchSpec:
    parameter: str
    targets: tuple[float, ...]
    control: TraceControl = field(default_factory=TraceControl)


@dataclass(frozen=True)
class InitialSpec:
    kind: str  # gaussian | solitary_wave | snapshot
    amplitude: float = 1.0
    width: float = 1.0
    center: float = 0.0
    path: str | None = None
    perturbation_amplitude: float = 0.0
    perturbation_width: float = 1.0
    perturbation_center: float = 0.0


@dataclass(frozen=True)
class EvolutionSpec:
    t_end: float
    n_steps: int
    snapshot_stride: int = 100
    dealias: bool = False


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    kind: str
    description: str
    model: Model
    n_modes: int
    scale: float
    solver: SolverConfig
    wave: WaveSpec | None = None
    branch: BranchSpec | None = None
    initial: InitialSpec | None = None
    evolution: EvolutionSpec | None = None
    report: dict = field(default_factory=dict)
    output_dir: str | None = None


def parse_targets(text: str) -> tuple[float, ...]:
    """Expand a target list; ``a:b:n`` tokens become ``linspace(a, b, n)``."""
    out: list[float] = []
    for token in text.split(","):
        token = token.strip()
        if not token:
            continue
        if ":" in token:
            parts = token.split(":")
            if len(parts) != 3:
                raise ConfigError(f"bad range token {token!r}, expected start:stop:count")
            try:
                a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
            except ValueError as exc:
                raise ConfigError(f"bad range token {token!r}: {exc}") from exc
            if n < 2:
                raise ConfigError(f"range token {token!r} needs count >= 2")
            out.extend(np.linspace(a, b, n).tolist())
        else:
            try:
                out.append(float(token))
            except ValueError as exc:
                raise ConfigError(f"bad target value {token!r}") from exc
    if not out:
        raise ConfigError("empty target list")
    return tuple(out)


def _infer(value: str):
    low = value.strip().lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    try:
        return int(value)
    except ValueError:
        pass
    try:
        return float(value)
    except ValueError:
        return value.strip()


class _Section:
    """Typed accessors over one configparser section with uniform errors."""

    def __init__(self, parser: configparser.ConfigParser, name: str):
        self.name = name
        self.data = dict(parser[name]) if parser.has_section(name) else None

    def __bool__(self) -> bool:
        return self.data is not None

    def _fetch(self, key: str, default, required: bool):
        if self.data is None or key not in self.data:
            if required:
                raise ConfigError(f"missing required option [{self.name}] {key}")
            return default
        return self.data[key]

    def get(self, key: str, default: str | None = None, required: bool = False) -> str | None:
        raw = self._fetch(key, default, required)
        return raw if raw is None else str(raw).strip()

    def getfloat(self, key: str, default=None, required: bool = False):
        raw = self._fetch(key, None, required)
        if raw is None:
            return default
        try:
            return float(raw)
        except ValueError as exc:
            raise ConfigError(f"[{self.name}] {key} = {raw!r} is not a number") from exc

    def getint(self, key: str, default=None, required: bool = False):
        raw = self._fetch(key, None, required)
        if raw is None:
            return default
        try:
            return int(raw)
        except ValueError as exc:
            raise ConfigError(f"[{self.name}] {key} = {raw!r} is not an integer") from exc

    def getbool(self, key: str, default: bool = False) -> bool:
        raw = self._fetch(key, None, False)
        if raw is None:
            return default
        val = _infer(str(raw))
        if not isinstance(val, bool):
            raise ConfigError(f"[{self.name}] {key} = {raw!r} is not a boolean")
        return val

    def extras(self, known: set[str]) -> dict:
        if self.data is None:
            return {}
        return {k: _infer(v) for k, v in self.data.items() if k not in known}


def _parse_model(sec: _Section) -> Model:
    family_name = sec.get("family", required=True)
    try:
        family = Family(family_name)
    except ValueError as exc:
        names = ", ".join(f.value for f in Family)
        raise ConfigError(f"unknown model family {family_name!r} (choose from {names})") from exc
    kwargs = dict(
        alpha=sec.getfloat("alpha", 0.0),
        beta=sec.getfloat("beta", 0.0),
        delta=sec.getfloat("delta"),
        delta1=sec.getfloat("delta1"),
        delta2=sec.getfloat("delta2"),
    )
    try:
        return Model(family=family, **kwargs)
    except ValueError as exc:
        raise ConfigError(f"invalid model parameters: {exc}") from exc


def _parse_config(parser: configparser.ConfigParser, origin: str) -> ExperimentConfig:
    meta = _Section(parser, "meta")
    if not meta:
        raise ConfigError(f"{origin}: missing [meta] section")
    name = meta.get("name", required=True)
    kind = meta.get("kind", required=True)
    if kind not in KINDS:
        raise ConfigError(f"{origin}: unknown kind {kind!r} (choose from {', '.join(KINDS)})")
    description = meta.get("description", "")

    model_sec = _Section(parser, "model")
    if not model_sec:
        raise ConfigError(f"{origin}: missing [model] section")
    model = _parse_model(model_sec)

    grid_sec = _Section(parser, "grid")
    if not grid_sec:
        raise ConfigError(f"{origin}: missing [grid] section")
    n_modes = grid_sec.getint("n_modes", required=True)
    scale = grid_sec.getfloat("scale", required=True)
    if n_modes < 4 or n_modes % 2:
        raise ConfigError(f"{origin}: n_modes must be even and >= 4, got {n_modes}")
    if scale <= 0:
        raise ConfigError(f"{origin}: scale must be positive, got {scale}")

    solver_sec = _Section(parser, "solver")
    solver = SolverConfig(
        tol=solver_sec.getfloat("tol", SolverConfig.tol),
        max_iter=solver_sec.getint("max_iter", SolverConfig.max_iter),
        gmres_restart=solver_sec.getint("gmres_restart", SolverConfig.gmres_restart),
        gmres_rtol=solver_sec.getfloat("gmres_rtol", SolverConfig.gmres_rtol),
        gmres_max_inner=solver_sec.getint("gmres_max_inner", SolverConfig.gmres_max_inner),
    )

    wave_sec = _Section(parser, "wave")
    wave = None
    if wave_sec:
        seed = wave_sec.get("seed", "auto")
        if seed not in SEED_NAMES:
            raise ConfigError(
                f"{origin}: unknown seed {seed!r} (choose from {', '.join(SEED_NAMES)})"
            )
        continue_parameter = wave_sec.get("continue_parameter", "alpha")
        if continue_parameter not in ("alpha", "beta", "c", "delta"):
            raise ConfigError(
                f"{origin}: continue_parameter must be alpha, beta, c, or delta"
            )
        wave = WaveSpec(
            c=wave_sec.getfloat("c", required=True),
            seed=seed,
            force=wave_sec.getbool("force", False),
            seed_amplitude=wave_sec.getfloat("seed_amplitude"),
            seed_width=wave_sec.getfloat("seed_width"),
            continue_from=wave_sec.getfloat("continue_from"),
            continue_parameter=continue_parameter,
            continue_steps=wave_sec.getint("continue_steps", 12),
        )

    branch_sec = _Section(parser, "branch")
    branch = None
    if branch_sec:
        parameter = branch_sec.get("parameter", required=True)
        if parameter not in ("alpha", "beta", "c", "delta"):
            raise ConfigError(f"{origin}: branch parameter must be alpha, beta, c, or delta")
        targets = parse_targets(branch_sec.get("targets", required=True))
        control = TraceControl(
            min_relative_step=branch_sec.getfloat(
                "min_relative_step", TraceControl.min_relative_step
            ),
            delocalization_threshold=branch_sec.getfloat(
                "delocalization_threshold", TraceControl.delocalization_threshold
            ),
        )
        branch = BranchSpec(parameter=parameter, targets=targets, control=control)

    initial_sec = _Section(parser, "initial")
    initial = None
    if initial_sec:
        ikind = initial_sec.get("type", required=True)
        if ikind not in ("gaussian", "solitary_wave", "snapshot"):
            raise ConfigError(
                f"{origin}: initial type must be gaussian, solitary_wave, or snapshot"
            )
        initial = InitialSpec(
            kind=ikind,
            amplitude=initial_sec.getfloat("amplitude", 1.0),
            width=initial_sec.getfloat("width", 1.0),
            center=initial_sec.getfloat("center", 0.0),
            path=initial_sec.get("path"),
            perturbation_amplitude=initial_sec.getfloat("perturbation_amplitude", 0.0),
            perturbation_width=initial_sec.getfloat("perturbation_width", 1.0),
            perturbation_center=initial_sec.getfloat("perturbation_center", 0.0),
        )
        if ikind == "snapshot" and not initial.path:
            raise ConfigError(f"{origin}: initial type snapshot requires path")

    evolution_sec = _Section(parser, "evolution")
    evolution = None
    if evolution_sec:
        evolution = EvolutionSpec(
            t_end=evolution_sec.getfloat("t_end", required=True),
            n_steps=evolution_sec.getint("n_steps", required=True),
            snapshot_stride=evolution_sec.getint("snapshot_stride", 100),
            dealias=evolution_sec.getbool("dealias", False),
        )
        if evolution.t_end <= 0 or evolution.n_steps < 1:
            raise ConfigError(f"{origin}: evolution needs t_end > 0 and n_steps >= 1")

    report_sec = _Section(parser, "report")
    report = report_sec.extras(set()) if report_sec else {}

    output_sec = _Section(parser, "output")
    output_dir = output_sec.get("dir") if output_sec else None

    needs = {
        "solve_wave": ("wave",),
        "trace_branch": ("wave", "branch"),
        "evolve": ("initial", "evolution"),
        "stability_test": ("wave", "evolution"),
        "resolution_test": ("initial", "evolution"),
    }
    present = {"wave": wave, "branch": branch, "initial": initial, "evolution": evolution}
    for requirement in needs[kind]:
        if present[requirement] is None:
            raise ConfigError(f"{origin}: kind {kind} requires a [{requirement}] section")

    return ExperimentConfig(
        name=name,
        kind=kind,
        description=description,
        model=model,
        n_modes=n_modes,
        scale=scale,
        solver=solver,
        wave=wave,
        branch=branch,
        initial=initial,
        evolution=evolution,
        report=report,
        output_dir=output_dir,
    )


def _new_parser() -> configparser.ConfigParser:
    return configparser.ConfigParser(
        interpolation=None, inline_comment_prefixes=("#", ";"), empty_lines_in_values=False
    )


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    parser = _new_parser()
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except (configparser.Error, UnicodeDecodeError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return _parse_config(parser, str(path))


def loads_config(text: str, origin: str = "<string>") -> ExperimentConfig:
    parser = _new_parser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"{origin}: {exc}") from exc
    return _parse_config(parser, origin)

"""Experiment runner: turns a parsed configuration into artifacts.

Each run writes into one output directory: binary state snapshots, CSV
series and branch files, ``report.json`` / ``report.txt``, and (optionally)
PNG figures.  Runs are deterministic, so rerunning a config reproduces the
delimited output byte for byte.

Output directory resolution order: explicit argument, the config's
``[output] dir``, ``$BENWAVE_OUTPUT_ROOT/<name>``, ``./runs/<name>``.
"""

from __future__ import annotations

import dataclasses
import os
import time
from importlib import resources
from pathlib import Path

import numpy as np

from . import io as bwio
from .config import ConfigError, ExperimentConfig, InitialSpec, WaveSpec, load_config
from .diagnostics import (
    RunReport,
    count_sign_changes,
    plateau_detect,
    radiation_split,
    resolve_leading_structure,
)
from .evolution import BlowUpError, Trajectory, evolve
from .models import Model, critical_wavenumber
from .spectral import Grid, RealField, make_grid, translate
from .waves import (
    NewtonDivergedError,
    SolitaryWave,
    SolverConfig,
    Termination,
    TraceControl,
    bo_soliton,
    effective_kdv_seed,
    kdv_soliton,
    newton_krylov_solve,
    tail_classify,
    trace_branch,
)

__all__ = [
    "ExperimentInfo",
    "OUTPUT_ROOT_ENV",
    "bundled_config_dir",
    "find_config",
    "list_experiments",
    "resolve_output_dir",
    "run_experiment",
]

OUTPUT_ROOT_ENV = "BENWAVE_OUTPUT_ROOT"


@dataclasses.dataclass(frozen=True)
class ExperimentInfo:
    name: str
    kind: str
    n_modes: int
    scale: float
    description: str
    path: Path


def bundled_config_dir() -> Path:
    return Path(str(resources.files("benwave").joinpath("configs")))


def list_experiments() -> list[ExperimentInfo]:
    """Static registry of the named experiment configs shipped in the package."""
    entries = []
    for path in sorted(bundled_config_dir().glob("*.cfg")):
        cfg = load_config(path)
        entries.append(
            ExperimentInfo(
                name=cfg.name,
                kind=cfg.kind,
                n_modes=cfg.n_modes,
                scale=cfg.scale,
                description=cfg.description,
                path=path,
            )
        )
    return entries


def find_config(name_or_path: str) -> Path:
    """Resolve a CLI argument to a config file: path first, then bundled name."""
    p = Path(name_or_path)
    if p.exists():
        return p
    candidate = bundled_config_dir() / f"{name_or_path}.cfg"
    if candidate.exists():
        return candidate
    names = ", ".join(e.name for e in list_experiments())
    raise ConfigError(f"no config file or bundled experiment {name_or_path!r} (bundled: {names})")


def resolve_output_dir(config: ExperimentConfig, override: str | Path | None = None) -> Path:
    if override is not None:
        return Path(override)
    if config.output_dir:
        return Path(config.output_dir)
    root = os.environ.get(OUTPUT_ROOT_ENV)
    if root:
        return Path(root) / config.name
    return Path("runs") / config.name


# ---------------------------------------------------------------------------
# seeds and initial data


def _build_wave_seed(spec: WaveSpec, model: Model, c: float, grid: Grid) -> RealField:
    name = spec.seed
    if name == "kdv_soliton":
        return kdv_soliton(grid, c, model.beta)
    if name == "bo_soliton":
        return bo_soliton(grid, c)
    if name == "effective_kdv":
        return effective_kdv_seed(model, c, grid)
    if name == "gaussian":
        amp = spec.seed_amplitude if spec.seed_amplitude is not None else 3.0 * c
        width = spec.seed_width if spec.seed_width is not None else 1.0
        return RealField(grid, amp * np.exp(-((grid.nodes) / width) ** 2))
    # automatic choice by family and velocity sign
    fam = model.family.value
    if fam in ("ilw", "ilw_benjamin", "milw_benjamin"):
        return effective_kdv_seed(model, c, grid)
    if fam == "bo":
        return bo_soliton(grid, c)
    if model.beta > 0 and c < 0:
        return kdv_soliton(grid, c, model.beta)
    if model.alpha > 0 and c > 0:
        return bo_soliton(grid, c)
    raise ConfigError(
        f"no automatic seed for family {fam} at c={c}; set an explicit seed in [wave]"
    )


def _obtain_wave(
    model: Model, grid: Grid, spec: WaveSpec, solver: SolverConfig
) -> SolitaryWave:
    """Solve the configured wave, continuing from an easier parameter if asked."""
    if spec.continue_from is None:
        seed = _build_wave_seed(spec, model, spec.c, grid)
        return newton_krylov_solve(model, spec.c, seed, solver, force=spec.force)

    par = spec.continue_parameter
    if par == "c":
        final_value, c0 = spec.c, spec.continue_from
        start_model = model
    else:
        final_value, c0 = getattr(model, par), spec.c
        start_model = model.with_parameter(par, spec.continue_from)
    seed = _build_wave_seed(spec, start_model, c0, grid)
    start = newton_krylov_solve(start_model, c0, seed, solver, force=spec.force)
    if spec.continue_from == final_value:
        return start
    targets = np.linspace(spec.continue_from, final_value, spec.continue_steps + 1)[1:]
    control = TraceControl(delocalization_threshold=np.inf)
    branch = trace_branch(start, par, targets.tolist(), control, solver)
    if branch.termination is not Termination.COMPLETED:
        raise NewtonDivergedError(
            f"continuation in {par} from {spec.continue_from} to {final_value} "
            f"stalled at {branch.failure_value}"
        )
    return branch.waves()[-1]


def _gaussian(grid: Grid, amplitude: float, width: float, center: float) -> np.ndarray:
    return amplitude * np.exp(-(((grid.nodes - center) / width) ** 2))


def _build_initial(
    config: ExperimentConfig, grid: Grid
) -> tuple[RealField, SolitaryWave | None]:
    spec = config.initial
    if spec.kind == "gaussian":
        return RealField(grid, _gaussian(grid, spec.amplitude, spec.width, spec.center)), None
    if spec.kind == "snapshot":
        field, _, _ = bwio.read_snapshot(spec.path)
        if field.grid.n_modes != grid.n_modes or field.grid.scale != grid.scale:
            raise ConfigError(
                f"snapshot {spec.path} has grid ({field.grid.n_modes}, {field.grid.scale}), "
                f"config wants ({grid.n_modes}, {grid.scale})"
            )
        return field, None
    # solitary_wave: solve the configured wave, then superpose the perturbation
    if config.wave is None:
        raise ConfigError("initial type solitary_wave requires a [wave] section")
    wave = _obtain_wave(config.model, grid, config.wave, config.solver)
    values = wave.profile.values.copy()
    if spec.perturbation_amplitude != 0.0:
        values = values + _gaussian(
            grid, spec.perturbation_amplitude, spec.perturbation_width, spec.perturbation_center
        )
    return RealField(grid, values), wave


# ---------------------------------------------------------------------------
# per-kind runners


def _new_report(config: ExperimentConfig) -> RunReport:
    return RunReport(name=config.name, kind=config.kind, config=dataclasses.asdict(config))


def _wave_summary(wave: SolitaryWave, prefix: str = "") -> dict:
    out = {
        f"{prefix}velocity": wave.velocity,
        f"{prefix}peak_amplitude": float(np.max(np.abs(wave.profile.values))),
        f"{prefix}residual_norm": wave.residual_norm,
        f"{prefix}newton_iterations": wave.newton_iterations,
        f"{prefix}spectral_tail": wave.spectral_tail,
        f"{prefix}boundary_tail": wave.boundary_tail,
        f"{prefix}energy": wave.energy,
        f"{prefix}sign_changes": count_sign_changes(wave.profile),
    }
    if wave.pohozaev is not None:
        out[f"{prefix}pohozaev_max_relative"] = wave.pohozaev.max_relative()
    return out


def _save_profile(
    report: RunReport, outdir: Path, wave: SolitaryWave, stem: str, render: bool
) -> None:
    snap = bwio.write_snapshot(outdir / f"{stem}.bws", wave.profile, 0.0, wave.model)
    report.artifacts.append(snap.name)
    if render:
        from . import figures

        fig = figures.save_profile_figure(wave, outdir / f"{stem}.png")
        report.artifacts.append(fig.name)


def _run_solve_wave(
    config: ExperimentConfig, outdir: Path, render: bool, report: RunReport
) -> None:
    grid = make_grid(config.n_modes, config.scale)
    opts = config.report
    wave = _obtain_wave(config.model, grid, config.wave, config.solver)
    report.summary.update(_wave_summary(wave))
    report.add_check("residual_norm", wave.residual_norm, config.solver.tol, "<=")
    if "max_boundary_tail" in opts:
        report.add_check("boundary_tail", wave.boundary_tail, opts["max_boundary_tail"], "<=")
    if "max_spectral_tail" in opts:
        report.add_check("spectral_tail", wave.spectral_tail, opts["max_spectral_tail"], "<=")
    if "max_pohozaev" in opts and wave.pohozaev is not None:
        report.add_check(
            "pohozaev_max_relative", wave.pohozaev.max_relative(), opts["max_pohozaev"], "<="
        )
    if opts.get("classify_tail"):
        fit = tail_classify(wave)
        report.summary["tail_kind"] = fit.kind
        report.summary["tail_constant_or_rate"] = fit.constant_or_rate
        report.summary["tail_algebraic_misfit"] = fit.algebraic_misfit
        report.summary["tail_exponential_misfit"] = fit.exponential_misfit
        if "expect_tail" in opts:
            report.add_check("tail_kind_matches", fit.kind == opts["expect_tail"], True, "bool")
    if opts.get("compare_ground_state"):
        ground = _ground_state_wave(config, grid, opts)
        ratio = wave.energy / ground.energy
        report.summary["ground_state_energy"] = ground.energy
        report.summary["energy_ratio"] = ratio
        if "energy_ratio_min" in opts:
            report.add_check("energy_ratio_min", ratio, opts["energy_ratio_min"], ">=")
        if "energy_ratio_max" in opts:
            report.add_check("energy_ratio_max", ratio, opts["energy_ratio_max"], "<=")
        _save_profile(report, outdir, ground, "ground_state", render)
    _save_profile(report, outdir, wave, "profile", render)


def _ground_state_wave(config: ExperimentConfig, grid: Grid, opts: dict) -> SolitaryWave:
    """Trace from an easy parameter value to the configured one; the traced
    endpoint is the reference (lowest-energy) critical point."""
    par = opts.get("ground_parameter", "alpha")
    start_value = float(opts.get("ground_start", 0.0))
    steps = int(opts.get("ground_steps", 10))
    spec = WaveSpec(
        c=config.wave.c,
        seed="auto",
        continue_from=start_value,
        continue_parameter=par,
        continue_steps=steps,
    )
    return _obtain_wave(config.model, grid, spec, config.solver)


def _run_trace_branch(
    config: ExperimentConfig, outdir: Path, render: bool, report: RunReport
) -> None:
    grid = make_grid(config.n_modes, config.scale)
    opts = config.report
    spec = config.branch
    start = _obtain_wave(config.model, grid, config.wave, config.solver)
    branch = trace_branch(start, spec.parameter, list(spec.targets), spec.control, config.solver)

    values = branch.values()
    waves = branch.waves()
    peaks = [float(np.max(np.abs(w.profile.values))) for w in waves]
    residuals = [w.residual_norm for w in waves]
    report.summary.update(
        {
            "parameter": spec.parameter,
            "n_points": len(values),
            "start_value": values[0],
            "final_value": values[-1],
            "termination": branch.termination.value,
            "failure_value": branch.failure_value,
            "max_residual_norm": max(residuals),
            "max_spectral_tail": max(w.spectral_tail for w in waves),
            "final_peak_amplitude": peaks[-1],
            "final_boundary_tail": waves[-1].boundary_tail,
            "final_sign_changes": count_sign_changes(waves[-1].profile),
        }
    )
    report.add_check("max_residual_norm", max(residuals), config.solver.tol, "<=")
    if "max_spectral_tail" in opts:
        report.add_check(
            "max_spectral_tail",
            max(w.spectral_tail for w in waves),
            opts["max_spectral_tail"],
            "<=",
        )
    if "final_parameter_min" in opts:
        report.add_check("final_parameter", values[-1], opts["final_parameter_min"], ">=")
    if "final_parameter_max" in opts:
        report.add_check("final_parameter", values[-1], opts["final_parameter_max"], "<=")
    if "expect_termination" in opts:
        report.add_check(
            "termination_matches",
            branch.termination.value == opts["expect_termination"],
            True,
            "bool",
        )
    if opts.get("check_peak_decreasing"):
        strictly = all(b < a for a, b in zip(peaks, peaks[1:]))
        report.add_check("peak_strictly_decreasing", strictly, True, "bool")
    if "min_sign_change_gain" in opts:
        ref_value = float(opts.get("sign_change_reference", 1.0))
        j = int(np.argmin(np.abs(np.asarray(values) - ref_value)))
        gain = count_sign_changes(waves[-1].profile) - count_sign_changes(waves[j].profile)
        report.summary["sign_changes_at_reference"] = count_sign_changes(waves[j].profile)
        report.summary["sign_change_gain"] = gain
        report.add_check("sign_change_gain", gain, opts["min_sign_change_gain"], ">=")
    if "min_points" in opts:
        report.add_check("n_points", len(values), opts["min_points"], ">=")

    csv = bwio.write_branch_csv(outdir / "branch.csv", branch)
    report.artifacts.append(csv.name)
    _save_profile(report, outdir, waves[-1], "final_profile", render)
    if render:
        from . import figures

        fig = figures.save_branch_figure(branch, outdir / "branch.png")
        report.artifacts.append(fig.name)


def _trajectory_artifacts(
    report: RunReport,
    outdir: Path,
    traj: Trajectory,
    render: bool,
    label: str = "",
) -> None:
    suffix = f"_{label}" if label else ""
    csv = bwio.write_series_csv(outdir / f"series{suffix}.csv", traj)
    report.artifacts.append(csv.name)
    t0, first = traj.snapshots[0]
    t1, last = traj.snapshots[-1]
    for tag, t, field in (("initial", t0, first), ("final", t1, last)):
        snap = bwio.write_snapshot(outdir / f"{tag}{suffix}.bws", field, t, traj.model)
        report.artifacts.append(snap.name)
    if render:
        from . import figures

        for maker, stem in (
            (figures.save_evolution_figure, "evolution"),
            (figures.save_series_figure, "series"),
        ):
            fig = maker(traj, outdir / f"{stem}{suffix}.png")
            report.artifacts.append(fig.name)


def _evolve_with_partial_artifacts(
    config: ExperimentConfig,
    u0: RealField,
    outdir: Path,
    render: bool,
    report: RunReport,
    label: str = "",
) -> Trajectory:
    ev = config.evolution
    try:
        return evolve(
            u0,
            config.model,
            t_end=ev.t_end,
            n_steps=ev.n_steps,
            snapshot_stride=ev.snapshot_stride,
            dealias=ev.dealias,
        )
    except BlowUpError as exc:
        if exc.trajectory is not None and exc.trajectory.times.size:
            _trajectory_artifacts(report, outdir, exc.trajectory, render, label)
        report.summary["blow_up_time"] = exc.time
        report.add_check("finite_evolution", False, True, "bool")
        bwio.write_report(report, outdir)
        raise


def _series_checks(report: RunReport, traj: Trajectory, opts: dict, suffix: str = "") -> None:
    e_final = abs(float(traj.energy_rel_drift[-1]))
    m_final = abs(float(traj.mass_rel_drift[-1]))
    report.summary[f"final_energy_drift{suffix}"] = e_final
    report.summary[f"final_mass_drift{suffix}"] = m_final
    report.summary[f"final_spectral_tail{suffix}"] = float(traj.spectral_tail[-1])
    report.summary[f"final_linf{suffix}"] = float(traj.linf[-1])
    if "max_energy_drift" in opts:
        report.add_check(f"energy_drift{suffix}", e_final, opts["max_energy_drift"], "<=")
    if "max_mass_drift" in opts:
        report.add_check(f"mass_drift{suffix}", m_final, opts["max_mass_drift"], "<=")
    if "max_spectral_tail" in opts:
        report.add_check(
            f"spectral_tail{suffix}", float(traj.spectral_tail[-1]), opts["max_spectral_tail"], "<="
        )


def _plateau_check(report: RunReport, traj: Trajectory, opts: dict, suffix: str = "") -> bool:
    window = float(opts.get("plateau_window_fraction", 0.25))
    rel_tol = float(opts.get("plateau_rel_tol", 0.05))
    verdict = plateau_detect(traj.linf, window_fraction=window, rel_tol=rel_tol)
    report.summary[f"plateau_detected{suffix}"] = verdict
    if "plateau_expected" in opts:
        report.add_check(f"plateau{suffix}", verdict, bool(opts["plateau_expected"]), "bool")
    return verdict


def _band_growth_checks(
    report: RunReport,
    config: ExperimentConfig,
    u0: RealField,
    final: RealField,
    opts: dict,
    suffix: str = "",
) -> None:
    if "min_high_band_growth" not in opts and "min_left_share_growth" not in opts:
        return
    k_star = float(opts.get("k_star", 0.0)) or critical_wavenumber(config.model)
    before = radiation_split(u0, k_star)
    after = radiation_split(final, k_star)
    report.summary[f"k_star{suffix}"] = k_star
    report.summary[f"high_band_share_initial{suffix}"] = before.right_share
    report.summary[f"high_band_share_final{suffix}"] = after.right_share
    report.summary[f"low_band_share_initial{suffix}"] = before.left_share
    report.summary[f"low_band_share_final{suffix}"] = after.left_share
    if "min_high_band_growth" in opts:
        growth = after.right_share / before.right_share if before.right_share > 0 else np.inf
        report.summary[f"high_band_growth{suffix}"] = growth
        report.add_check(
            f"high_band_growth{suffix}", growth, opts["min_high_band_growth"], ">="
        )
    if "min_left_share_growth" in opts:
        growth = after.left_share / before.left_share if before.left_share > 0 else np.inf
        report.summary[f"low_band_growth{suffix}"] = growth
        report.add_check(
            f"low_band_growth{suffix}", growth, opts["min_left_share_growth"], ">="
        )


def _run_evolve(
    config: ExperimentConfig, outdir: Path, render: bool, report: RunReport
) -> None:
    grid = make_grid(config.n_modes, config.scale)
    opts = config.report
    u0, wave = _build_initial(config, grid)
    if wave is not None:
        report.summary.update(_wave_summary(wave, prefix="wave_"))
        _save_profile(report, outdir, wave, "profile", render)
    traj = _evolve_with_partial_artifacts(config, u0, outdir, render, report)
    report.summary["dt"] = traj.dt
    _series_checks(report, traj, opts)
    if "plateau_expected" in opts or opts.get("check_plateau"):
        _plateau_check(report, traj, opts)
    if opts.get("compare_translate"):
        if wave is None:
            raise ConfigError("compare_translate needs initial type solitary_wave")
        shifted = translate(wave.profile, wave.velocity * config.evolution.t_end)
        err = float(np.max(np.abs(traj.final_state().values - shifted.values)))
        report.summary["translation_error"] = err
        report.add_check(
            "translation_error", err, float(opts.get("translate_tol", 1e-10)), "<="
        )
    _band_growth_checks(report, config, u0, traj.final_state(), opts)
    _trajectory_artifacts(report, outdir, traj, render)


def _run_stability_test(
    config: ExperimentConfig, outdir: Path, render: bool, report: RunReport
) -> None:
    grid = make_grid(config.n_modes, config.scale)
    opts = config.report
    wave = _obtain_wave(config.model, grid, config.wave, config.solver)
    report.summary.update(_wave_summary(wave, prefix="wave_"))
    _save_profile(report, outdir, wave, "profile", render)
    peak0 = float(np.max(np.abs(wave.profile.values)))

    init = config.initial or InitialSpec(kind="solitary_wave")
    amp = init.perturbation_amplitude
    signs = (1.0, -1.0) if amp != 0.0 else (1.0,)
    for sign in signs:
        label = "" if amp == 0.0 else ("plus" if sign > 0 else "minus")
        suffix = f"_{label}" if label else ""
        bump = _gaussian(grid, sign * amp, init.perturbation_width, init.perturbation_center)
        u0 = RealField(grid, wave.profile.values + bump)
        traj = _evolve_with_partial_artifacts(config, u0, outdir, render, report, label)
        _series_checks(report, traj, opts, suffix)
        dev_final = abs(float(traj.linf[-1]) - peak0) / peak0
        dev_max = float(np.max(np.abs(traj.linf - peak0))) / peak0
        report.summary[f"amplitude_deviation_final{suffix}"] = dev_final
        report.summary[f"amplitude_deviation_max{suffix}"] = dev_max
        if "max_amplitude_deviation" in opts:
            report.add_check(
                f"amplitude_deviation{suffix}",
                dev_final,
                opts["max_amplitude_deviation"],
                "<=",
            )
        _band_growth_checks(report, config, u0, traj.final_state(), opts, suffix)
        _trajectory_artifacts(report, outdir, traj, render, label)


def _run_resolution_test(
    config: ExperimentConfig, outdir: Path, render: bool, report: RunReport
) -> None:
    grid = make_grid(config.n_modes, config.scale)
    opts = config.report
    u0, _ = _build_initial(config, grid)
    traj = _evolve_with_partial_artifacts(config, u0, outdir, render, report)
    _series_checks(report, traj, opts)
    _plateau_check(report, traj, {**opts, "plateau_expected": opts.get("plateau_expected", True)})
    resolved, speed = resolve_leading_structure(traj, config.model, config.solver)
    report.summary["tracked_speed"] = speed
    report.summary.update(_wave_summary(resolved, prefix="resolved_"))
    report.add_check(
        "resolve_residual",
        resolved.residual_norm,
        float(opts.get("max_resolve_residual", 1e-8)),
        "<=",
    )
    _save_profile(report, outdir, resolved, "resolved_profile", render)
    _trajectory_artifacts(report, outdir, traj, render)


_RUNNERS = {
    "solve_wave": _run_solve_wave,
    "trace_branch": _run_trace_branch,
    "evolve": _run_evolve,
    "stability_test": _run_stability_test,
    "resolution_test": _run_resolution_test,
}


def run_experiment(
    config: ExperimentConfig,
    output_dir: str | Path | None = None,
    render_figures: bool = True,
) -> RunReport:
    """Execute one experiment and write its artifacts; returns the report.

    Raises :class:`NewtonDivergedError` / :class:`NonexistenceError` on
    solver failure and :class:`BlowUpError` on a diverging evolution (the
    partial series is still written in that case).
    """
    outdir = resolve_output_dir(config, output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    report = _new_report(config)
    started = time.perf_counter()
    _RUNNERS[config.kind](config, outdir, render_figures, report)
    report.summary["wall_time_s"] = time.perf_counter() - started
    bwio.write_report(report, outdir)
    return report

"""Post-processing: plateau verdicts, spectral splits, structure recovery."""

import numpy as np
import pytest

from benwave import (
    Family,
    Model,
    TraceControl,
    count_sign_changes,
    evolve,
    kdv_soliton,
    make_grid,
    newton_krylov_solve,
    plateau_detect,
    radiation_split,
    trace_branch,
)
from benwave.diagnostics import (
    extract_leading_structure,
    resolve_leading_structure,
    spectral_decay_certificate,
)
from benwave.spectral import RealField, l2_norm_sq


@pytest.fixture(scope="module")
def deep_water_wave():
    """Converged nonlocal wave at alpha = 1, c = -1, reached by continuation."""
    g = make_grid(1024, 20.0)
    local_limit = Model(Family.BENJAMIN, alpha=0.0, beta=1.0)
    start = newton_krylov_solve(local_limit, -1.0, kdv_soliton(g, -1.0, 1.0))
    control = TraceControl(delocalization_threshold=1e-2)
    branch = trace_branch(start, "alpha", np.linspace(0.1, 1.0, 10).tolist(), control)
    return branch.waves()[-1]


class TestPlateauDetect:
    def test_flat_series_is_a_plateau(self):
        assert plateau_detect(np.full(100, 3.0))

    def test_steady_growth_is_not(self):
        assert not plateau_detect(np.linspace(1.0, 2.0, 100))

    def test_settling_oscillation_is_a_plateau(self):
        t = np.linspace(0, 20, 400)
        series = 2.0 + np.exp(-t) * np.sin(8 * t)
        assert plateau_detect(series)

    def test_growing_envelope_is_not(self):
        t = np.linspace(0, 20, 400)
        assert not plateau_detect(2.0 + 0.2 * t * np.abs(np.sin(8 * t)))

    @pytest.mark.parametrize("factor", [0.01, 3.7, 1e6])
    def test_invariant_under_positive_scaling(self, factor):
        t = np.linspace(0, 20, 400)
        for series in (2.0 + np.exp(-t) * np.sin(8 * t), 1.0 + 0.05 * t):
            assert plateau_detect(series) == plateau_detect(factor * series)

    def test_invariant_under_time_shift(self):
        # verdicts depend only on the trailing window, not on how much
        # history precedes it
        tail = 5.0 + 0.001 * np.sin(np.linspace(0, 30, 40))
        short = np.concatenate([np.linspace(0, 5, 120), tail])  # window of 40
        long = np.concatenate([np.linspace(0, 5, 160), tail])   # same window
        assert plateau_detect(short, window_fraction=0.25) == plateau_detect(
            long, window_fraction=0.2
        )

    def test_short_series_rejected(self):
        with pytest.raises(ValueError, match="too short"):
            plateau_detect(np.ones(30))  # needs 40 at the default window

    def test_bad_window_rejected(self):
        with pytest.raises(ValueError):
            plateau_detect(np.ones(100), window_fraction=0.0)

    def test_all_zero_window_counts_as_flat(self):
        assert plateau_detect(np.zeros(100))


class TestRadiationSplit:
    def test_parts_sum_to_total_energy(self, rng):
        g = make_grid(512, 10.0)
        u = RealField(g, rng.standard_normal(512))
        split = radiation_split(u, 3.0)
        total = l2_norm_sq(u)
        assert abs(split.total - total) <= 1e-12 * total
        assert split.left_share + split.right_share == pytest.approx(1.0, abs=1e-14)

    def test_single_mode_lands_on_one_side(self):
        g = make_grid(256, 10.0)
        k0 = 12.0 / g.scale
        u = RealField(g, np.cos(k0 * g.nodes))
        assert radiation_split(u, 2.0 * k0).left_share == pytest.approx(1.0, abs=1e-15)
        assert radiation_split(u, 0.5 * k0).right_share == pytest.approx(1.0, abs=1e-15)

    def test_mode_on_the_split_counts_as_right_going(self):
        g = make_grid(256, 10.0)
        k0 = 12.0 / g.scale
        u = RealField(g, np.cos(k0 * g.nodes))
        assert radiation_split(u, k0).right_share == pytest.approx(1.0, abs=1e-15)

    def test_rejects_nonpositive_split_wavenumber(self):
        g = make_grid(64, 1.0)
        u = RealField(g, np.ones(64))
        with pytest.raises(ValueError):
            radiation_split(u, 0.0)


class TestSpectralDecayCertificate:
    def test_smooth_field_passes(self):
        g = make_grid(256, 10.0)
        u = RealField(g, np.exp(-(g.nodes**2)))
        assert spectral_decay_certificate(u)

    def test_noise_fails(self, rng):
        g = make_grid(256, 10.0)
        assert not spectral_decay_certificate(RealField(g, rng.standard_normal(256)))

    def test_zero_field_passes(self):
        g = make_grid(64, 1.0)
        assert spectral_decay_certificate(RealField(g, np.zeros(64)))


class TestCountSignChanges:
    def make(self, values):
        g = make_grid(len(values), 1.0)
        return RealField(g, np.asarray(values, dtype=float))

    def test_basic_alternation(self):
        assert count_sign_changes(self.make([1, 1, -1, -1, 1, 1, -1, -1])) == 3

    def test_zero_field(self):
        assert count_sign_changes(self.make([0.0] * 8)) == 0

    def test_single_hump(self):
        g = make_grid(128, 3.0)
        assert count_sign_changes(RealField(g, np.exp(-(g.nodes**2)))) == 0

    def test_sub_floor_dips_are_ignored(self):
        assert count_sign_changes(self.make([1, -1e-9, 1, 1, 1, 1, 1, 1])) == 0
        assert count_sign_changes(self.make([1, -1e-3, 1, 1, 1, 1, 1, 1])) == 2


class TestStructureRecovery:
    def test_pure_traveling_wave_is_recovered(self, deep_water_wave):
        # snapshots aligned so the peak advances a whole node per frame;
        # the re-solved wave then reproduces the input profile
        w = deep_water_wave
        g = w.profile.grid
        stride, n_steps = 20, 320
        dt = g.spacing / stride  # |c| = 1
        traj = evolve(w.profile, w.model, n_steps * dt, n_steps, snapshot_stride=stride)
        resolved, speed = resolve_leading_structure(traj, w.model)
        assert abs(speed - w.velocity) <= 1e-8
        assert resolved.residual_norm <= 1e-10
        assert np.max(np.abs(resolved.profile.values - w.profile.values)) <= 1e-8

    def test_windowing_keeps_the_hump_and_tapers_the_rest(self, deep_water_wave):
        w = deep_water_wave
        g = w.profile.grid
        stride = 20
        dt = g.spacing / stride
        traj = evolve(w.profile, w.model, 100 * dt, 100, snapshot_stride=stride)
        windowed, _ = extract_leading_structure(traj)
        peak_in = np.max(np.abs(traj.final_state().values))
        assert np.max(np.abs(windowed.values)) == pytest.approx(peak_in, rel=1e-12)

    def test_needs_at_least_two_snapshots(self, deep_water_wave):
        # every run records at least start and end, so prune one off
        w = deep_water_wave
        traj = evolve(w.profile, w.model, 0.01, 1, snapshot_stride=10)
        traj.snapshots[:] = traj.snapshots[:1]
        with pytest.raises(ValueError, match="two snapshots"):
            extract_leading_structure(traj)

    def test_flat_state_has_no_structure(self, benjamin_model):
        g = make_grid(128, 5.0)
        traj = evolve(RealField(g, np.zeros(128)), benjamin_model, 0.01, 2, snapshot_stride=1)
        with pytest.raises(ValueError, match="flat final state"):
            extract_leading_structure(traj)

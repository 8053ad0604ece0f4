"""Traveling-wave solver: seeds, Newton-Krylov, continuation, tail analysis."""

import contextlib
import dataclasses

import numpy as np
import pytest

import benwave.waves as waves
from benwave import Family, Model, make_grid
from benwave.models import pohozaev_residuals
from benwave.spectral import RealField, SpectralField, forward, inverse
from benwave.waves import (
    ExistenceClass,
    NewtonDivergedError,
    NonexistenceError,
    NotClassifiableError,
    SolitaryWave,
    SolverConfig,
    Termination,
    TraceControl,
    bo_soliton,
    boundary_tail,
    effective_kdv_seed,
    existence_guard,
    kdv_soliton,
    newton_krylov_solve,
    periodic_traveling_wave,
    residual,
    spectral_tail,
    tail_classify,
    trace_branch,
    traveling_symbol,
)
from conftest import mirror_defect


def fake_wave(grid, model, amplitude=1.0, btail=0.0, c=-1.0):
    """Hand-built converged-looking wave for continuation control-flow tests."""
    vals = amplitude * np.exp(-(grid.nodes**2))
    return SolitaryWave(
        profile=RealField(grid, vals),
        velocity=c,
        model=model,
        residual_norm=1e-12,
        newton_iterations=1,
        spectral_tail=1e-13,
        boundary_tail=btail,
        energy=-1.0,
        pohozaev=None,
    )


class TestSeeds:
    def test_kdv_soliton_formula(self, grid20):
        u = kdv_soliton(grid20, -1.0, 1.0)
        x = grid20.nodes
        expect = -3.0 / np.cosh(0.5 * x) ** 2
        assert np.max(np.abs(u.values - expect)) < 1e-14
        with pytest.raises(ValueError):
            kdv_soliton(grid20, 0.5, 1.0)
        with pytest.raises(ValueError):
            kdv_soliton(grid20, -1.0, 0.0)

    def test_kdv_soliton_is_overflow_free_for_wide_arguments(self):
        g = make_grid(256, 2000.0)
        u = kdv_soliton(g, -1.0, 1.0)
        assert np.all(np.isfinite(u.values))

    def test_bo_soliton_formula(self, grid20):
        u = bo_soliton(grid20, 0.5, )
        expect = 2.0 / (1.0 + 0.25 * grid20.nodes**2)
        assert np.max(np.abs(u.values - expect)) < 1e-14
        with pytest.raises(ValueError):
            bo_soliton(grid20, -0.5)

    def test_effective_seed_falls_back_to_closed_forms(self, grid20):
        kdv = Model(Family.KDV, beta=1.0)
        assert np.array_equal(
            effective_kdv_seed(kdv, -1.0, grid20).values, kdv_soliton(grid20, -1.0, 1.0).values
        )
        bo = Model(Family.BO, alpha=1.0)
        assert np.array_equal(
            effective_kdv_seed(bo, 0.5, grid20).values, bo_soliton(grid20, 0.5).values
        )

    def test_effective_seed_uses_long_wave_dispersion(self):
        # beta - alpha*delta/3 plays the role of the local coefficient
        g = make_grid(512, 3.0)
        m = Model(Family.ILW_BENJAMIN, alpha=1.0, beta=0.06, delta=0.9)
        b_eff = 0.06 - 0.9 / 3.0
        u = effective_kdv_seed(m, 1.0, g)  # c and b_eff are both "wrong sign" together
        expect = 3.0 / np.cosh(0.5 * np.sqrt(-1.0 / b_eff) * g.nodes) ** 2
        assert np.max(np.abs(u.values - expect)) < 1e-14

    def test_effective_seed_rejects_same_sign_combination(self):
        g = make_grid(512, 3.0)
        m = Model(Family.ILW_BENJAMIN, alpha=1.0, beta=0.06, delta=0.9)
        with pytest.raises(ValueError):
            effective_kdv_seed(m, -1.0, g)  # -c/b_eff < 0 here


class TestResidual:
    def test_definition_matches_longhand(self, rng, benjamin_model):
        g = make_grid(128, 2.0)
        u = RealField(g, rng.standard_normal(128))
        Q = forward(u)
        out = residual(benjamin_model, Q, c=-0.8)
        lsym = traveling_symbol(benjamin_model, g, -0.8)
        expect = lsym * Q.coeffs + 0.5 * forward(RealField(g, u.values**2)).coeffs
        assert np.max(np.abs(out.coeffs - expect)) < 1e-14

    def test_exact_local_soliton_is_a_root(self, grid20, kdv_model):
        Q = forward(kdv_soliton(grid20, -1.0, 1.0))
        r = residual(kdv_model, Q, -1.0)
        assert np.max(np.abs(r.coeffs)) <= 1e-12

    def test_jacobian_action_consistency(self, rng, benjamin_model):
        # finite differences of the residual converge to the matrix-free
        # Jacobian action at first order in the step
        g = make_grid(256, 5.0)
        u = RealField(g, np.exp(-(g.nodes**2)))
        h = RealField(g, rng.standard_normal(256))
        q_hat, h_hat = forward(u).coeffs, forward(h).coeffs
        lsym = traveling_symbol(benjamin_model, g, -1.0)
        jh = lsym * h_hat + forward(RealField(g, u.values * h.values)).coeffs

        def fd_error(eps):
            plus = residual(benjamin_model, SpectralField(g, q_hat + eps * h_hat), -1.0)
            base = residual(benjamin_model, SpectralField(g, q_hat), -1.0)
            return np.max(np.abs((plus.coeffs - base.coeffs) / eps - jh))

        e4, e6 = fd_error(1e-4), fd_error(1e-6)
        assert e4 < 1e-3
        assert 50.0 < e4 / e6 < 200.0  # first order in eps


class TestNewtonSolve:
    def test_converges_from_exact_seed_in_two_iterations(self, kdv_wave):
        assert kdv_wave.newton_iterations <= 2
        assert kdv_wave.residual_norm <= 1e-10

    def test_residual_round_trip_integrity(self, kdv_wave, kdv_model):
        r = residual(kdv_model, forward(kdv_wave.profile), kdv_wave.velocity)
        recomputed = float(np.max(np.abs(r.coeffs)))
        assert abs(recomputed - kdv_wave.residual_norm) <= 1e-13

    def test_converged_profile_is_even(self, kdv_wave):
        assert mirror_defect(kdv_wave.profile.values) <= 1e-10

    def test_tails_of_localized_wave(self, kdv_wave):
        assert kdv_wave.spectral_tail <= 1e-10
        assert kdv_wave.boundary_tail <= 1e-12

    def test_nonlocal_solve_records_pohozaev(self, grid20, benjamin_model):
        seed = kdv_soliton(grid20, -1.0, 1.0)
        w = newton_krylov_solve(benjamin_model.with_parameter("alpha", 0.3), -1.0, seed)
        assert w.residual_norm <= 1e-10
        assert w.pohozaev is not None
        p = pohozaev_residuals(w.model, w.profile, w.velocity)
        assert p.r4 == pytest.approx(w.pohozaev.r4, rel=1e-12, abs=1e-15)

    def test_finite_depth_solve_has_no_pohozaev(self):
        g = make_grid(1024, 3.0)
        m = Model(Family.ILW_BENJAMIN, alpha=1.0, beta=1.0, delta=0.9)
        w = newton_krylov_solve(m, -1.0, effective_kdv_seed(m, -1.0, g))
        assert w.residual_norm <= 1e-10
        assert w.pohozaev is None

    def test_diverges_cleanly_from_hopeless_seed(self, grid20, kdv_model):
        bad = RealField(grid20, 50.0 * np.sin(grid20.nodes))
        with pytest.raises(NewtonDivergedError) as err:
            newton_krylov_solve(kdv_model, -1.0, bad, SolverConfig(max_iter=4))
        assert len(err.value.history) >= 1
        assert err.value.last_iterate is not None


class TestExistenceWindows:
    def test_classification_boundaries(self):
        m = Model(Family.BENJAMIN, alpha=1.0, beta=1.0)
        assert existence_guard(m, -0.26) is ExistenceClass.KNOWN_EXISTS
        assert existence_guard(m, -0.25) is ExistenceClass.OPEN_WINDOW
        assert existence_guard(m, 0.0) is ExistenceClass.OPEN_WINDOW
        assert existence_guard(m, 0.2) is ExistenceClass.OPEN_WINDOW
        assert existence_guard(m, 0.21) is ExistenceClass.NONEXISTENT

    def test_rejects_degenerate_models(self, kdv_model):
        with pytest.raises(ValueError):
            existence_guard(kdv_model, -1.0)

    def test_solver_refuses_nonexistent_velocity(self, grid20, benjamin_model):
        seed = bo_soliton(grid20, 0.3)
        with pytest.raises(NonexistenceError, match="nonexistence window"):
            newton_krylov_solve(benjamin_model, 0.3, seed)

    def test_force_bypasses_the_refusal(self, grid20, benjamin_model):
        seed = bo_soliton(grid20, 0.3)
        with contextlib.suppress(NewtonDivergedError):
            newton_krylov_solve(
                benjamin_model, 0.3, seed, SolverConfig(max_iter=1), force=True
            )

    def test_open_window_warns(self, grid20, benjamin_model):
        seed = kdv_soliton(grid20, -0.2, 1.0)
        with pytest.warns(UserWarning, match="open existence window"):
            with contextlib.suppress(NewtonDivergedError):
                newton_krylov_solve(benjamin_model, -0.2, seed, SolverConfig(max_iter=1))

    def test_zero_velocity_warns(self, grid20, kdv_model):
        seed = kdv_soliton(grid20, -1.0, 1.0)
        with pytest.warns(UserWarning, match="singular"):
            with contextlib.suppress(NewtonDivergedError):
                newton_krylov_solve(kdv_model, 0.0, seed, SolverConfig(max_iter=1))


class TestTraceBranch:
    def test_local_continuation_in_dispersion(self, kdv_wave):
        branch = trace_branch(kdv_wave, "beta", [1.05, 1.1, 1.15, 1.2])
        assert branch.termination is Termination.COMPLETED
        assert branch.values() == [1.0, 1.05, 1.1, 1.15, 1.2]
        assert branch.points[0][1] is kdv_wave
        assert all(w.residual_norm <= 1e-10 for w in branch.waves())
        assert all(w.model.beta == v for v, w in branch.points[1:])

    def test_peaks_decrease_with_growing_nonlocal_term(self, grid20):
        local_limit = Model(Family.BENJAMIN, alpha=0.0, beta=1.0)
        start = newton_krylov_solve(local_limit, -1.0, kdv_soliton(grid20, -1.0, 1.0))
        # algebraic far fields sit well above the default localization
        # threshold at this domain size, so loosen it as the configs do
        control = TraceControl(delocalization_threshold=1e-2)
        branch = trace_branch(start, "alpha", np.linspace(0.1, 0.5, 5).tolist(), control)
        assert branch.termination is Termination.COMPLETED
        peaks = [np.max(np.abs(w.profile.values)) for w in branch.waves()]
        assert all(b < a for a, b in zip(peaks, peaks[1:]))
        # every converged point stays even
        assert max(mirror_defect(w.profile.values) for w in branch.waves()) <= 1e-10

    def test_rejects_nonmonotone_targets(self, kdv_wave):
        with pytest.raises(ValueError, match="monotone"):
            trace_branch(kdv_wave, "beta", [1.2, 1.1])
        with pytest.raises(ValueError, match="monotone"):
            trace_branch(kdv_wave, "beta", [])

    def test_rejects_unknown_or_absent_parameters(self, kdv_wave):
        with pytest.raises(ValueError):
            trace_branch(kdv_wave, "gamma", [1.0])
        with pytest.raises(ValueError):
            trace_branch(kdv_wave, "delta", [1.0])  # local model has no depth

    def test_delocalized_start_ends_immediately(self, kdv_wave):
        loose = dataclasses.replace(kdv_wave, boundary_tail=1.0)
        branch = trace_branch(loose, "beta", [1.1])
        assert branch.termination is Termination.DELOCALIZED
        assert len(branch.points) == 1
        assert branch.failure_value == 1.0

    def test_divergence_reports_failed_target(self, kdv_wave, monkeypatch):
        def always_fails(model, c, seed, config=None, force=False):
            raise NewtonDivergedError("no")

        monkeypatch.setattr(waves, "newton_krylov_solve", always_fails)
        branch = trace_branch(kdv_wave, "beta", [1.1, 1.2])
        assert branch.termination is Termination.NEWTON_DIVERGED
        assert branch.failure_value == 1.1
        assert len(branch.points) == 1

    def test_collapse_onto_zero_counts_as_divergence(self, kdv_wave, monkeypatch):
        grid = kdv_wave.profile.grid

        def collapses(model, c, seed, config=None, force=False):
            return fake_wave(grid, model, amplitude=1e-9)

        monkeypatch.setattr(waves, "newton_krylov_solve", collapses)
        branch = trace_branch(kdv_wave, "beta", [1.1])
        assert branch.termination is Termination.NEWTON_DIVERGED
        assert len(branch.points) == 1

    def test_delocalized_point_is_kept(self, kdv_wave, monkeypatch):
        grid = kdv_wave.profile.grid

        def spreads(model, c, seed, config=None, force=False):
            return fake_wave(grid, model, amplitude=2.0, btail=0.5)

        monkeypatch.setattr(waves, "newton_krylov_solve", spreads)
        branch = trace_branch(kdv_wave, "beta", [1.1, 1.2])
        assert branch.termination is Termination.DELOCALIZED
        assert len(branch.points) == 2  # the spread-out wave itself is recorded
        assert branch.points[-1][0] == 1.1
        assert branch.failure_value == 1.1

    def test_failed_step_is_bisected(self, kdv_wave, monkeypatch):
        grid = kdv_wave.profile.grid
        asked = []
        reached = [1.0]

        def picky(model, c, seed, config=None, force=False):
            asked.append(model.beta)
            if abs(model.beta - reached[-1]) > 0.06:
                raise NewtonDivergedError("too far")
            reached.append(model.beta)
            return fake_wave(grid, model, amplitude=2.0)

        monkeypatch.setattr(waves, "newton_krylov_solve", picky)
        branch = trace_branch(kdv_wave, "beta", [1.1])
        assert branch.termination is Termination.COMPLETED
        assert asked[0] == pytest.approx(1.1)    # full step tried first
        assert asked[1] == pytest.approx(1.05)   # then halved
        assert branch.values()[-1] == 1.1

    def test_minimum_step_gives_up(self, kdv_wave, monkeypatch):
        def always_fails(model, c, seed, config=None, force=False):
            raise NewtonDivergedError("no")

        monkeypatch.setattr(waves, "newton_krylov_solve", always_fails)
        control = TraceControl(min_relative_step=0.3)
        branch = trace_branch(kdv_wave, "beta", [1.1], control)
        assert branch.termination is Termination.NEWTON_DIVERGED


class TestTailClassify:
    def test_exponential_for_local_wave(self, kdv_wave):
        fit = tail_classify(kdv_wave)
        assert fit.kind == "exponential"
        # sech^2((1/2) x) decays like exp(-|x|)
        assert fit.constant_or_rate == pytest.approx(1.0, rel=0.1)
        assert fit.exponential_misfit < fit.algebraic_misfit

    def test_algebraic_for_lorentzian_profile(self, grid20, benjamin_model):
        vals = 2.0 / (1.0 + grid20.nodes**2)
        wave = fake_wave(grid20, benjamin_model)
        wave = dataclasses.replace(
            wave,
            profile=RealField(grid20, vals),
            boundary_tail=boundary_tail(RealField(grid20, vals)),
        )
        fit = tail_classify(wave)
        assert fit.kind == "algebraic"
        assert fit.constant_or_rate == pytest.approx(2.0, rel=0.02)  # x^2 u -> 2

    def test_undecayed_profile_is_not_classifiable(self, grid20, benjamin_model):
        wave = dataclasses.replace(fake_wave(grid20, benjamin_model), boundary_tail=0.9)
        with pytest.raises(NotClassifiableError):
            tail_classify(wave)

    def test_zero_profile_is_not_classifiable(self, grid20, benjamin_model):
        wave = dataclasses.replace(
            fake_wave(grid20, benjamin_model),
            profile=RealField(grid20, np.zeros(grid20.n_modes)),
        )
        with pytest.raises(NotClassifiableError):
            tail_classify(wave)


class TestPeriodicWave:
    def test_mean_zero_solution_closes_the_equation(self):
        from benwave.spectral import tilbert_symbol

        g = make_grid(128, 1.0)
        m = Model(Family.ILW, alpha=1.0, delta=1.0)
        l, c = 1.0, -1.0 - 1.0 / np.tanh(1.0) + 0.1
        lam2 = -4.0 - 2.0 / np.tanh(2.0) - c
        a = np.sqrt(-0.8 * lam2)  # two-mode bifurcation estimate
        seed = RealField(g, a * np.cos(g.nodes) + 0.2 * np.cos(2 * g.nodes))
        w = periodic_traveling_wave(m, l, c, seed)
        assert w.residual_norm <= 1e-10
        assert np.max(np.abs(w.profile.values)) > 1.0  # nontrivial
        coeffs = forward(w.profile).coeffs
        assert abs(coeffs[0]) <= 1e-14  # mean zero
        # the recorded constant closes the unconstrained profile equation
        k = g.wavenumbers
        lin = -(k * k) - l * tilbert_symbol(k, m.delta) - c
        lhs = inverse(SpectralField(g, lin * coeffs)).values + 0.5 * w.profile.values**2
        assert np.max(np.abs(lhs - w.integration_constant)) <= 1e-8
        assert w.integration_constant == pytest.approx(
            0.5 * float(np.mean(w.profile.values**2)), rel=1e-12
        )

    def test_requires_a_depth_parameter(self, grid20, benjamin_model):
        seed = RealField(grid20, np.cos(grid20.nodes / 20.0))
        with pytest.raises(ValueError):
            periodic_traveling_wave(benjamin_model, 1.0, -1.0, seed)


class TestTailMeasures:
    def test_spectral_tail_reads_top_decile(self):
        g = make_grid(64, 1.0)
        c = np.zeros(64, dtype=complex)
        c[30] = 1e-4  # |k| = 30 is within the top decile of |k| <= 32
        assert spectral_tail(SpectralField(g, c)) == pytest.approx(1e-4)

    def test_boundary_tail_reads_outermost_nodes(self):
        g = make_grid(512, 1.0)
        v = np.zeros(512)
        v[0] = 0.25
        v[-1] = 0.5
        assert boundary_tail(RealField(g, v)) == 0.5

"""Optimizer and sweep: determinism, dominance, constraint handling."""

import itertools
import math

import numpy as np
import pytest

from cvtransducer import (
    FreeParameter,
    IdealProtocolSpec,
    OptimizationProblem,
    apply_parameters,
    ideal_protocol,
    log_negativity_ideal,
    optimize,
    protocol_coupling,
    scale_to_coupling,
    sweep,
    symmetric_protocol,
)
from cvtransducer.optimize import _Tracker


def lossy_spec(eta, t):
    return IdealProtocolSpec(gains=(eta,) * 4, loss_after_pass1=t,
                             loss_after_pass2=t)


def eta_free(upper, lower=0.0):
    return tuple(FreeParameter(f"eta{i}", lower, upper) for i in range(1, 5))


class TestOptimize:
    def test_deterministic_given_seed(self):
        problem = OptimizationProblem(
            objective="adiabatic", template=lossy_spec(1.5, 0.8),
            free=eta_free(1.5), budget=200, restarts=3, seed=42)
        a, b = optimize(problem), optimize(problem)
        assert a.best_params == b.best_params
        assert a.best_E_N == b.best_E_N
        assert a.evaluations_used == b.evaluations_used

    def test_zero_width_bounds_return_baseline(self):
        spec = lossy_spec(0.9, 0.85)
        problem = OptimizationProblem(
            objective="adiabatic", template=spec,
            free=tuple(FreeParameter(f"eta{i}", 0.9, 0.9) for i in range(1, 5)),
            budget=100, restarts=2, seed=0)
        report = optimize(problem)
        baseline = ideal_protocol(spec).E_N
        assert report.best_E_N == pytest.approx(baseline, abs=1e-12)
        assert report.best_params == {f"eta{i}": 0.9 for i in range(1, 5)}

    def test_lossless_optimum_sits_at_the_corner(self):
        # monotone ideal curve: optimum of eta_i in [0, eta] is all eta.
        eta = 1.2
        problem = OptimizationProblem(
            objective="adiabatic", template=lossy_spec(eta, 1.0),
            free=eta_free(eta), budget=300, restarts=3, seed=1)
        report = optimize(problem)
        # grid-search oracle at resolution 0.05 can only do worse or equal
        grid = np.arange(0.0, eta + 1e-9, 0.05)
        oracle = max(
            ideal_protocol(IdealProtocolSpec(gains=g)).E_N
            for g in itertools.product(grid, repeat=2)
            for g in [(g[0], g[1], g[0], g[1])]
        )
        assert report.best_E_N >= oracle - 1e-9
        assert report.best_E_N == pytest.approx(log_negativity_ideal(eta),
                                                abs=1e-6)
        for val in report.best_params.values():
            assert val == pytest.approx(eta, abs=1e-6)

    def test_optimization_beats_equal_gains_under_loss(self):
        # high loss, large gain cap: unequal gains must win
        problem = OptimizationProblem(
            objective="adiabatic", template=lossy_spec(2.5, 0.8),
            free=eta_free(2.5), budget=400, restarts=4, seed=3)
        report = optimize(problem)
        assert report.improvement_over_equal > 0.05
        assert report.best_E_N > report.baseline_E_N

    def test_improvement_never_negative(self):
        for seed in range(4):
            problem = OptimizationProblem(
                objective="adiabatic", template=lossy_spec(1.0, 0.9),
                free=eta_free(1.0), budget=120, restarts=2, seed=seed)
            assert optimize(problem).improvement_over_equal >= -1e-12

    def test_budget_respected(self):
        problem = OptimizationProblem(
            objective="adiabatic", template=lossy_spec(1.0, 0.9),
            free=eta_free(1.0), budget=60, restarts=2, seed=5)
        report = optimize(problem)
        # baseline + up to 16 corners may exceed the local-search budget cap
        assert report.evaluations_used <= 60 + 17

    def test_out_of_bounds_evaluation_rejected(self):
        problem = OptimizationProblem(
            objective="adiabatic", template=lossy_spec(0.5, 1.0),
            free=eta_free(1.0), budget=100, restarts=1, seed=0)
        tracker = _Tracker(problem)
        with pytest.raises(ValueError, match="outside bounds"):
            tracker(np.array([0.5, 0.5, 0.5, 1.5]))

    def test_dynamic_objective_with_g_and_tau(self):
        template = symmetric_protocol(0.05, 100.0, slices=512,
                                      gamma=1e-5, n_th=10.0)
        free = (FreeParameter("g1", 0.0, 0.1), FreeParameter("g3", 0.0, 0.1),
                FreeParameter("tau2", 50.0, 200.0))
        problem = OptimizationProblem(
            objective="dynamic", template=template, free=free,
            budget=80, restarts=2, seed=7)
        report = optimize(problem)
        assert report.improvement_over_equal >= -1e-12
        assert set(report.best_params) == {"g1", "g3", "tau2"}

    def test_eta_parametrization_respects_g_limits(self):
        template = symmetric_protocol(0.05, 100.0, slices=512)
        # eta = 2 at tau = 100 needs g = 0.1414, clipped to 0.08
        out = apply_parameters(template, ["eta1"], [2.0],
                               g_limits=((0.0, 0.08),) * 4)
        assert out.segments[0].g == pytest.approx(0.08)
        out2 = apply_parameters(template, ["eta1", "tau1"], [1.0, 200.0])
        assert out2.segments[0].tau == 200.0
        assert out2.segments[0].g == pytest.approx(1.0 / math.sqrt(2 * 200.0))

    def test_problem_validation(self):
        spec = lossy_spec(1.0, 1.0)
        with pytest.raises(ValueError, match="unknown adiabatic"):
            OptimizationProblem(objective="adiabatic", template=spec,
                                free=(FreeParameter("g1", 0, 1),),
                                budget=100, restarts=1)
        with pytest.raises(ValueError, match="budget"):
            OptimizationProblem(objective="adiabatic", template=spec,
                                free=eta_free(1.0), budget=5, restarts=1)
        with pytest.raises(ValueError, match="both g and eta"):
            OptimizationProblem(
                objective="dynamic",
                template=symmetric_protocol(0.05, 10.0, slices=32),
                free=(FreeParameter("g1", 0, 1), FreeParameter("eta1", 0, 1)),
                budget=100, restarts=1)


class TestSweep:
    def test_ideal_endpoint_values(self):
        points = sweep(IdealProtocolSpec(gains=(1.0,) * 4), "eta",
                       [0.0, 0.5, 1.0])
        assert points[0].E_N == 0.0
        assert points[1].E_N == pytest.approx(log_negativity_ideal(0.5),
                                              abs=1e-12)
        assert points[2].E_N == pytest.approx(1.2715533031636117, abs=1e-10)

    def test_grid_must_increase(self):
        with pytest.raises(ValueError, match="strictly increasing"):
            sweep(IdealProtocolSpec(gains=(1.0,) * 4), "eta", [0.0, 0.0, 1.0])
        with pytest.raises(ValueError, match="empty"):
            sweep(IdealProtocolSpec(gains=(1.0,) * 4), "eta", [])

    def test_optimized_dominates_pointwise(self):
        template = IdealProtocolSpec(gains=(1.0,) * 4, loss_after_pass1=0.8,
                                     loss_after_pass2=0.8)
        grid = [0.5, 1.5, 2.5]
        plain = sweep(template, "eta", grid, seed=11)
        tuned = sweep(template, "eta", grid, optimize_each=True,
                      budget=150, restarts=2, seed=11)
        for p, q in zip(plain, tuned):
            assert q.E_N >= p.E_N - 1e-12
            assert q.optimized and not p.optimized

    def test_zero_coupling_template_keeps_all_zeros(self):
        template = symmetric_protocol(0.0, 20.0, slices=48)
        points = sweep(template, "g", [0.0, 0.5, 1.0])
        assert all(p.E_N == 0.0 for p in points)

    def test_dyn_axes_reach_requested_coupling(self):
        template = symmetric_protocol(0.05, 100.0, slices=1024)
        for axis in ("g", "tau", "g_a", "g_b", "tau_a", "tau_b"):
            scaled = scale_to_coupling(template, axis, 1.3)
            assert protocol_coupling(scaled) == pytest.approx(1.3, rel=1e-12)

    def test_tau_axis_rejects_zero(self):
        template = symmetric_protocol(0.05, 100.0, slices=1024)
        with pytest.raises(ValueError, match="tau-axis"):
            scale_to_coupling(template, "tau", 0.0)

    def test_worker_pool_matches_serial(self):
        template = IdealProtocolSpec(gains=(1.0,) * 4, loss_after_pass1=0.9,
                                     loss_after_pass2=0.9)
        grid = [0.3, 0.9, 1.8]
        serial = sweep(template, "eta", grid, optimize_each=True,
                       budget=120, restarts=2, seed=21, workers=1)
        parallel = sweep(template, "eta", grid, optimize_each=True,
                         budget=120, restarts=2, seed=21, workers=2)
        for a, b in zip(serial, parallel):
            assert a.E_N == b.E_N
            assert a.params == b.params

    def test_dynamic_sweep_rows_carry_parameters(self):
        template = symmetric_protocol(0.05, 50.0, slices=256, gamma=1e-5,
                                      n_th=5.0)
        points = sweep(template, "g", [0.5, 1.0], with_estimate=True)
        for p in points:
            assert set(p.params) == {f"g{i}" for i in range(1, 5)} | {
                f"tau{i}" for i in range(1, 5)}
            assert p.convergence_estimate is not None

    def test_axis_template_mismatch(self):
        with pytest.raises(ValueError, match="axis='eta'"):
            sweep(symmetric_protocol(0.05, 10.0, slices=32), "eta", [0.5])
        with pytest.raises(ValueError, match="ideal sweeps"):
            sweep(IdealProtocolSpec(gains=(1.0,) * 4), "g", [0.5])

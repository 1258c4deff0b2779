"""Time-sliced engine: validation, backend equivalence, physics properties."""

import math

import numpy as np
import pytest

from cvtransducer import (
    DiscretizationError,
    LossEvent,
    ProtocolConfig,
    SegmentConfig,
    asymmetric_protocol,
    convergence_run,
    log_negativity_ideal,
    min_slices,
    refine,
    run_protocol,
    symmetric_protocol,
)
from cvtransducer import _kernels
from cvtransducer.dynamics import _segment_params
from cvtransducer.gaussian import symplectic_form


class TestConfigValidation:
    def test_builder_roundtrip(self):
        cfg = symmetric_protocol(0.05, 50.0, slices=128, gamma=1e-5, n_th=10.0,
                                 loss_a=0.9, loss_b=0.8)
        assert tuple(s.pulse for s in cfg.segments) == ("A", "B", "A", "B")
        assert cfg.loss_events == (LossEvent(1, "A", 0.9), LossEvent(2, "B", 0.8))
        assert cfg.initial_occupation == 10.0  # defaults to n_th

    def test_pulse_pattern_enforced(self):
        seg = SegmentConfig("A", 0.1, 1, 10.0, 1.0, 32)
        with pytest.raises(ValueError, match="A, B, A, B"):
            ProtocolConfig(segments=(seg, seg, seg, seg))

    def test_slice_mismatch_rejected(self):
        a1 = SegmentConfig("A", 0.1, -1, 10.0, 1.0, 32)
        b = SegmentConfig("B", 0.1, 1, 10.0, 1.0, 32)
        a2 = SegmentConfig("A", 0.1, 1, 10.0, 1.0, 64)
        with pytest.raises(ValueError, match="slice counts differ"):
            ProtocolConfig(segments=(a1, b, a2, b))

    def test_segment_bounds(self):
        with pytest.raises(ValueError):
            SegmentConfig("A", -0.1, 1, 10.0, 1.0, 32)
        with pytest.raises(ValueError):
            SegmentConfig("A", 0.1, 1, 10.0, 1.0, 8)  # slices >= 16
        with pytest.raises(ValueError):
            SegmentConfig("A", 0.1, 2, 10.0, 1.0, 32)
        with pytest.raises(ValueError):
            LossEvent(5, "A", 0.9)
        with pytest.raises(ValueError):
            LossEvent(1, "A", 1.1)

    def test_discretization_guard(self):
        cfg = symmetric_protocol(0.01, 2e4, slices=512)
        with pytest.raises(DiscretizationError, match="slices >= 40000"):
            run_protocol(cfg)
        assert min_slices(2e4, 1.0) == 40000

    def test_damping_step_guard(self):
        cfg = symmetric_protocol(0.05, 10.0, slices=32, kappa=0.05, gamma=8.0)
        with pytest.raises(DiscretizationError, match="gamma"):
            run_protocol(cfg)

    def test_backend_selection(self):
        cfg = symmetric_protocol(0.05, 10.0, slices=32)
        with pytest.raises(ValueError, match="dense"):
            run_protocol(cfg, backend="transfer", check_stages=True)
        with pytest.raises(ValueError, match="unknown backend"):
            run_protocol(cfg, backend="fast")


class TestTrivialLimits:
    def test_zero_coupling_is_identity(self):
        cfg = symmetric_protocol(0.0, 20.0, slices=48)
        res = run_protocol(cfg)
        np.testing.assert_allclose(res.pulse_cov, np.eye(4), atol=1e-12)
        assert res.E_N == 0.0

    def test_zero_coupling_all_levels_identical(self):
        cfg = symmetric_protocol(0.0, 10.0, slices=32)
        results = convergence_run(cfg, levels=3)
        for res in results:
            np.testing.assert_allclose(res.pulse_cov, np.eye(4), atol=1e-12)


class TestBackendEquivalence:
    CASES = [
        dict(g=0.06, tau=30.0, slices=64),
        dict(g=0.06, tau=30.0, slices=64, gamma=1e-4, n_th=5.0, n_m0=2.0),
        dict(g=0.08, tau=25.0, slices=64, loss_a=0.9, loss_b=0.85),
        dict(g=0.05, tau=40.0, slices=96, gamma=2e-4, n_th=30.0,
             loss_a=0.7, loss_b=0.9, idle_decay=False),
    ]

    @pytest.mark.parametrize("kw", CASES)
    def test_symmetric_cases(self, kw):
        cfg = symmetric_protocol(kw.pop("g"), kw.pop("tau"),
                                 slices=kw.pop("slices"), **kw)
        dense = run_protocol(cfg, backend="dense")
        fast = run_protocol(cfg, backend="transfer")
        np.testing.assert_allclose(fast.pulse_cov, dense.pulse_cov, atol=1e-10)
        np.testing.assert_allclose(fast.mech_cov, dense.mech_cov, atol=1e-10)
        np.testing.assert_allclose(fast.cross_cov, dense.cross_cov, atol=1e-10)
        assert fast.E_N == pytest.approx(dense.E_N, abs=1e-9)

    def test_asymmetric_case(self):
        cfg = asymmetric_protocol(
            0.05, 0.02, 30.0, 120.0, kappa_b=0.1, slices_a=64, slices_b=32,
            gamma=1e-4, n_th=8.0, loss_a=0.92, loss_b=0.88,
        )
        dense = run_protocol(cfg, backend="dense")
        fast = run_protocol(cfg, backend="transfer")
        np.testing.assert_allclose(fast.pulse_cov, dense.pulse_cov, atol=1e-10)
        np.testing.assert_allclose(fast.cross_cov, dense.cross_cov, atol=1e-10)

    def test_kernel_implementations_agree(self):
        # numba kernels against the pure-numpy reference implementations
        cfg = symmetric_protocol(0.07, 10.0, slices=32, gamma=3e-4, n_th=4.0)
        p = _segment_params(cfg, 0)
        rng = np.random.default_rng(5)
        dim = 2 * (3 + 2 * 32)

        Rt1 = np.ascontiguousarray(rng.normal(size=(dim, 6)))
        Rt2 = Rt1.copy()
        n1 = np.zeros((6, 6))
        n2 = np.zeros((6, 6))
        args = (p["pulse"], 2, 6, p["n_steps"], p["c"], p["s"], p["eps"],
                p["lam"], p["nvar"], p["damp"])
        _kernels.transfer_segment_backward(Rt1, n1, *args)
        _kernels.transfer_segment_backward_numpy(Rt2, n2, *args)
        np.testing.assert_allclose(Rt1, Rt2, atol=1e-12)
        np.testing.assert_allclose(n1, n2, atol=1e-12)

        m = rng.normal(size=(dim, dim))
        V1 = np.eye(dim) + 0.5 * (m @ m.T) / dim
        V2 = V1.copy()
        _kernels.dense_segment_forward(V1, *args)
        _kernels.dense_segment_forward_numpy(V2, *args)
        np.testing.assert_allclose(V1, V2, atol=1e-10)


class TestSinglePassOracle:
    def test_moments_match_greens_function_integrals(self):
        # One A-pass at kappa*tau = 3 (far from adiabatic): the sliced
        # engine must converge to the exact continuum moments, computed
        # here by integrating the cavity Green's function:
        #   c_q   = k sqrt(2 tau/kappa) [1 - (1 - e^-kt)/kt]
        #   Var(X_rect) = 1 + c_q^2 v           (passive part is vacuum)
        #   Var(p) = v + k^2 [ (1-e^-kt)^2/kappa^2
        #                      + (2/kappa)(tau - 2(1-e^-kt)/kappa
        #                                  + (1-e^-2kt)/(2 kappa)) ]
        kappa, g, tau, v = 1.0, 0.3, 3.0, 7.0
        sign = -1.0
        kt = kappa * tau
        c_q = sign * g * math.sqrt(2 * tau / kappa) * (
            1 - (1 - math.exp(-kt)) / kt)
        var_x = 1.0 + c_q ** 2 * v
        var_p = v + g ** 2 * (
            (1 - math.exp(-kt)) ** 2 / kappa ** 2
            + (2 / kappa) * (tau - 2 * (1 - math.exp(-kt)) / kappa
                             + (1 - math.exp(-2 * kt)) / (2 * kappa)))

        errors = []
        for n_steps in (1024, 2048, 4096):
            dt = tau / n_steps
            x = 2 * kappa * dt
            dim = 2 * (2 + n_steps)  # mech, cavity, slices
            V = np.eye(dim)
            V[0, 0] = V[1, 1] = v
            _kernels.dense_segment_forward(
                V, 0, 2, 4, n_steps, math.sqrt(1 - x), math.sqrt(x),
                sign * g * dt, 1.0, 0.0, False)
            w = np.zeros(dim)
            w[4::2] = 1 / math.sqrt(n_steps)
            errors.append((abs(w @ V @ w - var_x),
                           abs(w @ V[:, 0] - c_q * v),
                           abs(V[1, 1] - var_p)))
        for ex, exq, ep in errors:
            assert max(ex, exq, ep) < 0.02
        # first-order convergence in every moment
        for prev, cur in zip(errors, errors[1:]):
            for a, b in zip(prev, cur):
                assert b < 0.7 * a


class TestStepMaps:
    def test_per_step_symplecticity(self):
        cfg = asymmetric_protocol(0.05, 0.02, 30.0, 100.0, kappa_b=0.2,
                                  slices_a=64, slices_b=64)
        omega = symplectic_form(2)
        for i in range(4):
            p = _segment_params(cfg, i)
            W = np.array([[p["c"], 0, p["s"], 0], [0, p["c"], 0, p["s"]],
                          [p["s"], 0, -p["c"], 0], [0, p["s"], 0, -p["c"]]])
            np.testing.assert_allclose(W @ omega @ W.T, omega, atol=1e-12)
            sh = np.eye(4)
            if p["pulse"] == 0:
                sh[0, 2], sh[3, 1] = p["eps"], -p["eps"]
            else:
                sh[1, 3], sh[2, 0] = -p["eps"], p["eps"]
            np.testing.assert_allclose(sh @ omega @ sh.T, omega, atol=1e-12)

    def test_purity_conserved_without_decoherence(self):
        cfg = symmetric_protocol(0.1, 20.0, slices=64, idle_decay=False)
        res = run_protocol(cfg, backend="dense", keep_final_state=True)
        nu = res.final_state.symplectic_eigenvalues()
        np.testing.assert_allclose(nu, 1.0, atol=1e-6)

    def test_idle_decay_keeps_state_physical(self):
        cfg = symmetric_protocol(0.1, 20.0, slices=64, idle_decay=True)
        res = run_protocol(cfg, backend="dense", keep_final_state=True,
                           check_stages=True)
        assert res.final_state.symplectic_eigenvalues().min() >= 1 - 1e-6


class TestPhysics:
    def test_bath_irrelevant_without_damping(self):
        base = dict(slices=48, gamma=0.0, n_m0=0.0)
        a = run_protocol(symmetric_protocol(0.05, 20.0, n_th=0.0, **base))
        b = run_protocol(symmetric_protocol(0.05, 20.0, n_th=150.0, **base))
        assert np.array_equal(a.pulse_cov, b.pulse_cov)
        assert np.array_equal(a.mech_cov, b.mech_cov)

    def test_mediator_elimination_at_finite_kappa(self):
        # g << kappa: output entanglement insensitive to the initial
        # mechanical occupation even with full cavity dynamics
        runs = {}
        for n_m0 in (0.0, 200.0):
            cfg = symmetric_protocol(0.01, 2e4, slices=131072, n_m0=n_m0)
            runs[n_m0] = run_protocol(cfg).E_N
        assert abs(runs[0.0] - runs[200.0]) < 1e-3

    def test_deep_adiabatic_limit(self):
        cfg = symmetric_protocol(0.01, 2e4, slices=1_000_000)
        res = run_protocol(cfg)
        assert res.E_N == pytest.approx(log_negativity_ideal(2.0), rel=0.015)

    def test_lossy_deep_adiabatic_matches_lossy_composite(self):
        # delay-line loss placement agrees between the engine and the
        # closed-form composite in the fast-cavity regime
        from cvtransducer import IdealProtocolSpec, ideal_protocol

        g, kt, t = 0.01, 1e4, 0.8
        eta = g * math.sqrt(2 * kt)
        adiab = ideal_protocol(IdealProtocolSpec(
            gains=(eta,) * 4, loss_after_pass1=t, loss_after_pass2=t))
        cfg = symmetric_protocol(g, kt, slices=400_000, loss_a=t, loss_b=t)
        assert run_protocol(cfg).E_N == pytest.approx(adiab.E_N, rel=0.02)

    def test_asymmetric_deep_adiabatic_matches_benchmark(self):
        from cvtransducer import effective_coupling_asym

        g_a, g_b, tau_a, tau_b, kb = 0.005, 0.0008, 4000.0, 3e5, 0.01
        eta_p = effective_coupling_asym(g_a, g_b, tau_a, tau_b, 1.0, kb)
        cfg = asymmetric_protocol(g_a, g_b, tau_a, tau_b, kappa_b=kb,
                                  slices_a=160_000, slices_b=120_000)
        res = run_protocol(cfg)
        assert res.E_N == pytest.approx(log_negativity_ideal(eta_p), rel=0.02)

    def test_convergence_is_first_order(self):
        cfg = symmetric_protocol(0.01, 2e4, slices=125_000)
        results = convergence_run(cfg, levels=4)
        assert results[0].convergence_estimate is None
        deltas = [r.convergence_estimate for r in results[1:]]
        assert all(d2 < d1 for d1, d2 in zip(deltas, deltas[1:]))
        for d1, d2 in zip(deltas, deltas[1:]):
            assert d1 / d2 == pytest.approx(2.0, abs=0.5)

    def test_convergence_needs_two_levels(self):
        cfg = symmetric_protocol(0.05, 10.0, slices=32)
        with pytest.raises(ValueError):
            convergence_run(cfg, levels=1)

    def test_lossy_below_lossless_at_every_level(self):
        clean = symmetric_protocol(0.1, 30.0, slices=64)
        lossy = symmetric_protocol(0.1, 30.0, slices=64,
                                   loss_a=0.85, loss_b=0.85)
        for a, b in zip(convergence_run(clean, 3), convergence_run(lossy, 3)):
            assert b.E_N < a.E_N

    def test_loss_never_helps(self):
        for slices in (64, 128):
            cfg_clean = symmetric_protocol(0.1, 30.0, slices=slices,
                                           gamma=1e-4, n_th=20.0)
            cfg_lossy = symmetric_protocol(0.1, 30.0, slices=slices,
                                           gamma=1e-4, n_th=20.0,
                                           loss_a=0.8, loss_b=0.8)
            assert (run_protocol(cfg_lossy).E_N
                    < run_protocol(cfg_clean).E_N)

    def test_longer_tau_pays_more_bath_penalty(self):
        # same eta via large tau loses against same eta via large g
        gamma, n_th = 1.5e-6, 200.0
        for eta in (0.5, 1.0, 1.5, 2.0, 2.5):
            tau_g = 100.0
            g_route = symmetric_protocol(
                eta / math.sqrt(2 * tau_g), tau_g, slices=4096,
                gamma=gamma, n_th=n_th)
            g_fix = 0.02
            tau_t = (eta / g_fix) ** 2 / 2.0
            t_route = symmetric_protocol(
                g_fix, tau_t, slices=max(4096, min_slices(tau_t, 1.0) * 4),
                gamma=gamma, n_th=n_th)
            assert run_protocol(t_route).E_N <= run_protocol(g_route).E_N + 1e-12

    def test_estimate_convergence_field(self):
        cfg = symmetric_protocol(0.08, 20.0, slices=64)
        plain = run_protocol(cfg)
        assert plain.convergence_estimate is None
        est = run_protocol(cfg, estimate_convergence=True)
        fine = run_protocol(refine(cfg))
        assert est.convergence_estimate == pytest.approx(
            abs(est.E_N - fine.E_N), rel=1e-9)
        assert est.E_N == plain.E_N  # the result itself stays at dt

    def test_refine_doubles_slices(self):
        cfg = symmetric_protocol(0.05, 10.0, slices=32)
        assert all(s.slices == 64 for s in refine(cfg).segments)

    def test_dt_used_reported(self):
        cfg = asymmetric_protocol(0.05, 0.02, 30.0, 120.0, kappa_b=0.1,
                                  slices_a=64, slices_b=32)
        res = run_protocol(cfg)
        assert res.dt_used == (30.0 / 64, 120.0 / 32, 30.0 / 64, 120.0 / 32)

"""Closed-form transducer benchmark: gates, composite, loss laws."""

import math

import numpy as np
import pytest

from cvtransducer import (
    IdealProtocolSpec,
    QNDGateSpec,
    effective_coupling,
    effective_coupling_asym,
    four_pass_transfer,
    ideal_protocol,
    log_negativity_ideal,
    logneg_slope_origin,
    nu_minus_ideal,
    nu_minus_small_loss,
    qnd_gate_symplectic,
    symplectic_form,
)

# Frozen benchmark values, evaluated from the closed form
# nu = sqrt(1 + eta^4) - eta^2 (equivalently its radical form, checked below).
NU_ETA_01 = 0.9900499987500624
NU_ETA_1 = 0.41421356237309515   # sqrt(2) - 1
NU_ETA_2 = 0.12310562561766059   # sqrt(17) - 4
EN_ETA_1 = 1.2715533031636117
EN_ETA_2 = 3.0220314040214786


def radical_form(eta):
    """The benchmark's original radical expression (test-local oracle)."""
    if eta == 0:
        return 1.0
    return math.sqrt(1.0 - 2.0 * eta ** 4 * (math.sqrt(1.0 + eta ** -4) - 1.0))


class TestGates:
    def test_zero_gain_is_identity(self):
        for kind in ("A", "B"):
            ch = qnd_gate_symplectic(QNDGateSpec(kind, 0.0, 1))
            np.testing.assert_array_equal(ch.transfer, np.eye(4))

    @pytest.mark.parametrize("kind,gain,sign", [
        ("A", 0.7, 1), ("A", 1.3, -1), ("B", 0.4, 1), ("B", 2.1, -1)])
    def test_gates_are_symplectic(self, kind, gain, sign):
        ch = qnd_gate_symplectic(QNDGateSpec(kind, gain, sign))
        omega = symplectic_form(2)
        np.testing.assert_allclose(ch.transfer @ omega @ ch.transfer.T, omega,
                                   atol=1e-12)
        assert np.linalg.det(ch.transfer) == pytest.approx(1.0, abs=1e-12)
        assert np.abs(ch.noise).max() == 0.0
        assert ch.is_symplectic()

    def test_gate_spec_validation(self):
        with pytest.raises(ValueError):
            QNDGateSpec("C", 1.0)
        with pytest.raises(ValueError):
            QNDGateSpec("A", -0.5)
        with pytest.raises(ValueError):
            QNDGateSpec("A", 0.5, sign=0)


class TestComposite:
    def test_equal_gain_composite_matrix(self):
        eta = 0.83
        S = four_pass_transfer((eta,) * 4)
        expected = np.eye(6)
        expected[0, 2] = eta ** 2
        expected[3, 1] = -eta ** 2
        np.testing.assert_allclose(S, expected, atol=1e-12)

    def test_mechanics_returns_to_start(self):
        S = four_pass_transfer((1.7,) * 4)
        np.testing.assert_allclose(S[4:, :], np.eye(6)[4:, :], atol=1e-12)
        np.testing.assert_allclose(S[:4, 4:], 0.0, atol=1e-12)

    def test_composite_symplectic(self):
        S = four_pass_transfer((0.9, 1.1, 0.5, 1.4))
        omega = symplectic_form(3)
        np.testing.assert_allclose(S @ omega @ S.T, omega, atol=1e-12)


class TestIdealProtocol:
    def test_matches_closed_form_on_grid(self):
        for eta in np.linspace(0.0, 3.0, 21):
            res = ideal_protocol(IdealProtocolSpec(gains=(eta,) * 4))
            assert res.E_N == pytest.approx(log_negativity_ideal(eta),
                                            abs=1e-10)

    def test_mediator_dropped_for_equal_gains(self):
        covs = []
        for n_m0 in (0.0, 10.0, 200.0):
            res = ideal_protocol(IdealProtocolSpec(gains=(1.2,) * 4, n_m0=n_m0))
            covs.append(res.pulse_cov)
            np.testing.assert_allclose(res.mech_cov,
                                       (2 * n_m0 + 1) * np.eye(2), atol=1e-12)
            np.testing.assert_allclose(res.cross_cov, 0.0, atol=1e-12)
        np.testing.assert_allclose(covs[1], covs[0], atol=1e-10)
        np.testing.assert_allclose(covs[2], covs[0], atol=1e-10)

    def test_unequal_gains_expose_the_mediator(self):
        gains = (1.0, 1.0, 1.1, 1.0)
        cold = ideal_protocol(IdealProtocolSpec(gains=gains, n_m0=0.0))
        hot = ideal_protocol(IdealProtocolSpec(gains=gains, n_m0=200.0))
        assert abs(cold.E_N - hot.E_N) > 1e-3

    def test_pairwise_equal_gains_still_eliminate_the_mediator(self):
        # asymmetric transducer: equal gains within each pulse suffice, and
        # the output equals the symmetric benchmark at sqrt(eta_A eta_B)
        a, b = 1.7, 0.6
        res = ideal_protocol(IdealProtocolSpec(gains=(a, b, a, b), n_m0=200.0))
        assert np.abs(res.cross_cov).max() < 1e-12
        assert res.E_N == pytest.approx(
            log_negativity_ideal(math.sqrt(a * b)), abs=1e-10)

    def test_zero_gain_leaves_initial_state(self):
        res = ideal_protocol(IdealProtocolSpec(gains=(0.0,) * 4, n_m0=3.0))
        assert res.E_N == 0.0
        np.testing.assert_array_equal(res.pulse_cov, np.eye(4))
        np.testing.assert_array_equal(res.mech_cov, 7.0 * np.eye(2))

    def test_weak_coupling_lossless_value(self):
        res = ideal_protocol(IdealProtocolSpec(gains=(0.1,) * 4))
        assert res.nu_minus == pytest.approx(NU_ETA_01, abs=1e-12)

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            IdealProtocolSpec(gains=(1.0, 1.0, 1.0))
        with pytest.raises(ValueError):
            IdealProtocolSpec(gains=(-0.1, 1.0, 1.0, 1.0))
        with pytest.raises(ValueError):
            IdealProtocolSpec(gains=(1.0,) * 4, loss_after_pass1=1.2)
        with pytest.raises(ValueError):
            IdealProtocolSpec(gains=(1.0,) * 4, n_m0=-1.0)


class TestClosedForms:
    def test_frozen_values(self):
        assert nu_minus_ideal(0.0) == 1.0
        assert nu_minus_ideal(0.1) == pytest.approx(NU_ETA_01, abs=1e-15)
        assert nu_minus_ideal(1.0) == pytest.approx(NU_ETA_1, abs=1e-15)
        assert nu_minus_ideal(2.0) == pytest.approx(NU_ETA_2, abs=1e-15)
        assert log_negativity_ideal(1.0) == pytest.approx(EN_ETA_1, abs=1e-12)
        assert log_negativity_ideal(2.0) == pytest.approx(EN_ETA_2, abs=1e-12)

    def test_equivalent_to_radical_form(self):
        for eta in np.linspace(0.05, 3.0, 40):
            assert nu_minus_ideal(eta) == pytest.approx(radical_form(eta),
                                                        rel=1e-12)

    def test_strictly_decreasing(self):
        grid = np.linspace(0.0, 5.0, 400)
        nus = [nu_minus_ideal(e) for e in grid]
        assert all(b < a for a, b in zip(nus, nus[1:]))

    def test_negative_eta_rejected(self):
        with pytest.raises(ValueError):
            nu_minus_ideal(-0.1)


class TestLossLaws:
    def test_small_loss_formula_values(self):
        assert nu_minus_small_loss(0.1, 1.0) == pytest.approx(0.99, abs=1e-15)
        assert nu_minus_small_loss(0.0, 0.7) == 1.0
        assert nu_minus_small_loss(0.1, 0.9) == pytest.approx(0.9905, abs=1e-15)

    def test_small_loss_formula_against_exact(self):
        # agreement to O(eta^4) with the exact lossy composite
        for t in (1.0, 0.9):
            eta = 0.1
            exact = ideal_protocol(IdealProtocolSpec(
                gains=(eta,) * 4, loss_after_pass1=t, loss_after_pass2=t))
            assert abs(exact.nu_minus - nu_minus_small_loss(eta, t)) < eta ** 4

    def test_slope_coefficient_values(self):
        assert logneg_slope_origin(1.0) == pytest.approx(2.0 / math.log(2.0),
                                                         abs=1e-15)
        assert logneg_slope_origin(0.0) == 0.0
        assert logneg_slope_origin(0.81) == pytest.approx(
            2.0 / math.log(2.0) * 0.9, abs=1e-12)

    def test_slope_against_finite_difference(self):
        eta, h = 0.05, 1e-4
        for t in (1.0, 0.81):
            def en(e):
                return ideal_protocol(IdealProtocolSpec(
                    gains=(e,) * 4, loss_after_pass1=t,
                    loss_after_pass2=t)).E_N
            fd = (en(eta + h) - en(eta - h)) / (2 * h)
            assert fd == pytest.approx(logneg_slope_origin(t) * eta, rel=0.01)

    def test_interior_maximum_under_loss(self):
        grid = np.linspace(0.0, 3.0, 31)
        ens = [ideal_protocol(IdealProtocolSpec(
            gains=(e,) * 4, loss_after_pass1=0.8, loss_after_pass2=0.8)).E_N
            for e in grid]
        imax = int(np.argmax(ens))
        assert 0 < imax < len(grid) - 1
        assert ens[-1] < ens[imax]


class TestEffectiveCouplings:
    def test_symmetric_value(self):
        assert effective_coupling(0.01, 2e4, 1.0) == pytest.approx(2.0,
                                                                   rel=1e-12)

    def test_asymmetric_reduces_to_symmetric(self):
        got = effective_coupling_asym(0.03, 0.03, 500.0, 500.0, 1.0, 1.0)
        assert got == pytest.approx(effective_coupling(0.03, 500.0, 1.0),
                                    rel=1e-12)

    def test_zero_coupling_allowed(self):
        assert effective_coupling_asym(0.0, 0.1, 10.0, 10.0, 1.0, 1.0) == 0.0
        assert effective_coupling(0.0, 10.0, 1.0) == 0.0

    def test_invalid_rates_rejected(self):
        with pytest.raises(ValueError):
            effective_coupling(0.01, 0.0, 1.0)
        with pytest.raises(ValueError):
            effective_coupling(0.01, 10.0, -1.0)
        with pytest.raises(ValueError):
            effective_coupling(-0.01, 10.0, 1.0)
        with pytest.raises(ValueError):
            effective_coupling_asym(0.01, 0.01, 10.0, 0.0, 1.0, 1.0)

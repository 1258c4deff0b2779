"""Fast invariant suite behind the ``validate`` CLI subcommand.

Each check is a pure function returning (passed, detail).  These are
trimmed-down versions of the package's property tests, sized to finish in
seconds; the pytest suite remains the authoritative gate.
"""

from __future__ import annotations

import math

import numpy as np

from . import adiabatic, dynamics, gaussian
from .optimize import FreeParameter, OptimizationProblem, optimize


def _check_channel_composition():
    rng = np.random.default_rng(42)
    state = gaussian.GaussianState(
        _random_physical_cov(rng, 2), ("a", "b")
    )
    c1 = gaussian.loss_channel(0.7, 2)
    c2 = gaussian.loss_channel(0.9, 2)
    seq = gaussian.apply_channel(gaussian.apply_channel(state, c1, [0, 1]), c2, [0, 1])
    comp = gaussian.apply_channel(state, c1.then(c2), [0, 1])
    err = np.abs(seq.cov - comp.cov).max()
    return err < 1e-10, f"max deviation {err:.2e}"


def _check_loss_semigroup():
    a = gaussian.loss_channel(0.6).then(gaussian.loss_channel(0.5))
    b = gaussian.loss_channel(0.3)
    err = max(np.abs(a.transfer - b.transfer).max(),
              np.abs(a.noise - b.noise).max())
    return err < 1e-15, f"max deviation {err:.2e}"


def _check_partial_transpose_involution():
    rng = np.random.default_rng(1)
    st = gaussian.GaussianState(_random_physical_cov(rng, 3), ("a", "b", "c"))
    pt = gaussian.partial_transpose(st, [1])
    ptpt = gaussian.partial_transpose(
        gaussian.GaussianState(pt, st.labels), [1]
    )
    err = np.abs(ptpt - st.cov).max()
    return err == 0.0, f"max deviation {err:.2e}"


def _check_product_state_ppt():
    worst = 1.0
    for n1 in (0.0, 0.5, 7.0):
        for n2 in (0.0, 3.0):
            cov = np.diag([2 * n1 + 1] * 2 + [2 * n2 + 1] * 2)
            worst = min(worst, gaussian.nu_minus(cov))
    return worst >= 1.0 - 1e-10, f"min nu_- over products {worst:.12f}"


def _check_vacuum_spectrum():
    nu = gaussian.symplectic_eigenvalues(np.eye(8))
    err = np.abs(nu - 1.0).max()
    return err < 1e-10, f"max deviation {err:.2e}"


def _check_closed_form_equivalence():
    worst = 0.0
    for eta in np.linspace(0.0, 3.0, 16):
        res = adiabatic.ideal_protocol(adiabatic.IdealProtocolSpec(gains=(eta,) * 4))
        worst = max(worst, abs(res.E_N - adiabatic.log_negativity_ideal(eta)))
    return worst < 1e-10, f"max |E_N - closed form| {worst:.2e}"


def _check_monotonicity():
    grid = np.linspace(0.0, 4.0, 200)
    nus = [adiabatic.nu_minus_ideal(e) for e in grid]
    ok = all(b < a for a, b in zip(nus, nus[1:]))
    return ok, "nu strictly decreasing on [0, 4]"


def _check_mediator_elimination():
    base = None
    for n_m0 in (0.0, 10.0, 200.0):
        res = adiabatic.ideal_protocol(
            adiabatic.IdealProtocolSpec(gains=(1.3,) * 4, n_m0=n_m0)
        )
        if base is None:
            base = res.pulse_cov
        elif np.abs(res.pulse_cov - base).max() > 1e-10:
            return False, "pulse covariance depends on the mediator state"
    return True, "pulse covariance independent of n_m0"


def _check_unequal_gain_sensitivity():
    r0 = adiabatic.ideal_protocol(
        adiabatic.IdealProtocolSpec(gains=(1.0, 1.0, 1.1, 1.0), n_m0=0.0))
    r200 = adiabatic.ideal_protocol(
        adiabatic.IdealProtocolSpec(gains=(1.0, 1.0, 1.1, 1.0), n_m0=200.0))
    diff = abs(r0.E_N - r200.E_N)
    return diff > 1e-3, f"E_N difference {diff:.3f}"


def _check_loss_maximum():
    grid = np.linspace(0.0, 3.0, 31)
    ens = [adiabatic.ideal_protocol(adiabatic.IdealProtocolSpec(
        gains=(e,) * 4, loss_after_pass1=0.8, loss_after_pass2=0.8)).E_N
        for e in grid]
    imax = int(np.argmax(ens))
    ok = 0 < imax < len(grid) - 1 and ens[-1] < ens[imax]
    return ok, f"interior maximum at eta = {grid[imax]:.2f}"


def _check_step_symplecticity():
    cfg = dynamics.symmetric_protocol(0.05, 20.0, slices=40)
    worst = 0.0
    omega = gaussian.symplectic_form(2)
    for i in (0, 1):
        p = dynamics._segment_params(cfg, i)
        W = np.array([[p["c"], 0, p["s"], 0], [0, p["c"], 0, p["s"]],
                      [p["s"], 0, -p["c"], 0], [0, p["s"], 0, -p["c"]]])
        worst = max(worst, np.abs(W @ omega @ W.T - omega).max())
        sh = np.eye(4)
        if p["pulse"] == 0:
            sh[0, 2], sh[3, 1] = p["eps"], -p["eps"]
        else:
            sh[1, 3], sh[2, 0] = -p["eps"], p["eps"]
        worst = max(worst, np.abs(sh @ omega @ sh.T - omega).max())
    return worst < 1e-12, f"max |S Omega S^T - Omega| {worst:.2e}"


def _check_purity_conservation():
    # idle_decay discards cavity light, so unitarity needs it off
    cfg = dynamics.symmetric_protocol(0.1, 20.0, slices=64, idle_decay=False)
    res = dynamics.run_protocol(cfg, backend="dense", keep_final_state=True)
    nu = res.final_state.symplectic_eigenvalues()
    err = np.abs(nu - 1.0).max()
    return err < 1e-6, f"max |nu - 1| {err:.2e}"


def _check_bath_irrelevance():
    # n_m0 pinned: by default it tracks n_th, which is a different knob
    cfg0 = dynamics.symmetric_protocol(0.05, 20.0, slices=48, gamma=0.0,
                                       n_th=0.0, n_m0=0.0)
    cfg1 = dynamics.symmetric_protocol(0.05, 20.0, slices=48, gamma=0.0,
                                       n_th=150.0, n_m0=0.0)
    a = dynamics.run_protocol(cfg0, backend="transfer")
    b = dynamics.run_protocol(cfg1, backend="transfer")
    same = np.array_equal(a.pulse_cov, b.pulse_cov)
    return same, "gamma = 0 results are bit-identical for any n_th"


def _check_backend_equivalence():
    cfg = dynamics.symmetric_protocol(
        0.06, 30.0, slices=64, gamma=1e-4, n_th=5.0, n_m0=2.0,
        loss_a=0.9, loss_b=0.85,
    )
    a = dynamics.run_protocol(cfg, backend="dense")
    b = dynamics.run_protocol(cfg, backend="transfer")
    err = np.abs(a.pulse_cov - b.pulse_cov).max()
    return err < 1e-10, f"dense vs transfer max deviation {err:.2e}"


def _check_adiabatic_consistency():
    g, kt = 0.01, 1e4
    eta = g * math.sqrt(2 * kt)
    cfg = dynamics.symmetric_protocol(g, kt, slices=400_000)
    res = dynamics.run_protocol(cfg, backend="transfer")
    ref = adiabatic.log_negativity_ideal(eta)
    rel = abs(res.E_N - ref) / ref
    return rel < 0.02, f"relative deviation {rel:.3%} at eta = {eta:.2f}"


def _check_optimizer_determinism():
    problem = OptimizationProblem(
        objective="adiabatic",
        template=adiabatic.IdealProtocolSpec(gains=(0.8,) * 4,
                                             loss_after_pass1=0.8,
                                             loss_after_pass2=0.8),
        free=tuple(FreeParameter(f"eta{i}", 0.0, 0.8) for i in range(1, 5)),
        budget=150, restarts=2, seed=7,
    )
    a = optimize(problem)
    b = optimize(problem)
    same = a.best_params == b.best_params and a.best_E_N == b.best_E_N
    return same, "identical reports for identical seeds"


def _check_optimizer_dominance():
    problem = OptimizationProblem(
        objective="adiabatic",
        template=adiabatic.IdealProtocolSpec(gains=(2.0,) * 4,
                                             loss_after_pass1=0.7,
                                             loss_after_pass2=0.7),
        free=tuple(FreeParameter(f"eta{i}", 0.0, 2.0) for i in range(1, 5)),
        budget=200, restarts=2, seed=3,
    )
    rep = optimize(problem)
    ok = rep.improvement_over_equal >= -1e-12
    return ok, f"improvement {rep.improvement_over_equal:.4f}"


def _random_physical_cov(rng, n_modes: int) -> np.ndarray:
    m = rng.normal(size=(2 * n_modes, 2 * n_modes))
    return np.eye(2 * n_modes) + 0.5 * (m @ m.T) / (2 * n_modes)


CHECKS = [
    ("gaussian.channel_composition", _check_channel_composition),
    ("gaussian.loss_semigroup", _check_loss_semigroup),
    ("gaussian.partial_transpose_involution", _check_partial_transpose_involution),
    ("gaussian.product_state_ppt", _check_product_state_ppt),
    ("gaussian.vacuum_spectrum", _check_vacuum_spectrum),
    ("adiabatic.closed_form_equivalence", _check_closed_form_equivalence),
    ("adiabatic.monotonicity", _check_monotonicity),
    ("adiabatic.mediator_elimination", _check_mediator_elimination),
    ("adiabatic.unequal_gain_sensitivity", _check_unequal_gain_sensitivity),
    ("adiabatic.loss_interior_maximum", _check_loss_maximum),
    ("dynamics.step_symplecticity", _check_step_symplecticity),
    ("dynamics.purity_conservation", _check_purity_conservation),
    ("dynamics.bath_irrelevance", _check_bath_irrelevance),
    ("dynamics.backend_equivalence", _check_backend_equivalence),
    ("dynamics.adiabatic_consistency", _check_adiabatic_consistency),
    ("optimizer.determinism", _check_optimizer_determinism),
    ("optimizer.dominance", _check_optimizer_dominance),
]


def run_all(verbose: bool = True) -> tuple[int, int]:
    """Run every check; returns (passed, failed) counts."""
    passed = failed = 0
    for name, fn in CHECKS:
        try:
            ok, detail = fn()
        except Exception as exc:  # a crash is a failure, not an abort
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        if ok:
            passed += 1
        else:
            failed += 1
        if verbose:
            print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    if verbose:
        print(f"{passed} passed, {failed} failed")
    return passed, failed

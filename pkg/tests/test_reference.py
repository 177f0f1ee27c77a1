import numpy as np
import pytest
from numpy.testing import assert_allclose

from expdyn.material import LinearElastic, StVenantKirchhoff
from expdyn.reference import (
    LINEARLY_IMPLICIT,
    DirectIntegrator,
    DirectIntegratorConfig,
    DirectState,
    NonConvergenceError,
    amplification_matrix,
    hht_step,
    newmark_step,
    run_direct,
    spectral_radius,
    static_solve,
)
from expdyn.system import MatrixSystem

from conftest import LAM, MU, beam_system, quadratic_velocity


def test_config_validation():
    with pytest.raises(ValueError):
        DirectIntegratorConfig(0.0)
    with pytest.raises(ValueError):
        DirectIntegratorConfig(0.1, scheme="rk4")
    with pytest.raises(ValueError):
        DirectIntegratorConfig(0.1, alpha=-0.1)
    with pytest.raises(ValueError):
        DirectIntegratorConfig(0.1, variant="explicit")
    cfg = DirectIntegratorConfig.hht(0.1)
    assert cfg.beta == pytest.approx(1.33**2 / 4) and cfg.gamma == pytest.approx(0.83)


def test_newmark_amplification_closed_form():
    # trapezoidal rule on u'' = -w^2 u: rational map with unit-modulus eigenvalues
    for wdt in (0.1, 1.0, 10.0, 100.0):
        cfg = DirectIntegratorConfig.newmark(1.0)
        A = amplification_matrix(wdt, cfg)
        eig = np.linalg.eigvals(A)
        z = (1 - wdt**2 / 4 + 1j * wdt) / (1 + wdt**2 / 4)
        nonzero = eig[np.abs(eig) > 1e-12]
        assert_allclose(sorted(np.abs(nonzero)), [1.0, 1.0], atol=1e-13)
        assert np.min(np.abs(nonzero - z)) < 1e-12 or np.min(np.abs(nonzero - np.conj(z))) < 1e-12


def test_hht_dissipates_high_frequencies():
    cfg = DirectIntegratorConfig.hht(1.0, alpha=-0.3)
    assert spectral_radius(1e4, cfg) < 0.8
    assert spectral_radius(0.01, cfg) == pytest.approx(1.0, abs=1e-5)
    # gamma = 1/2 with negative alpha loses stability
    assert spectral_radius(1.0, DirectIntegratorConfig.hht(1.0, -0.33, 0.25, 0.5)) > 1.0


@pytest.mark.parametrize("make, order", [(lambda dt: DirectIntegratorConfig.newmark(dt), 2),
                                         (lambda dt: DirectIntegratorConfig.hht(dt, -0.1), 2)])
def test_oscillator_order(make, order):
    omega, T = 2.0, 1.1
    errs, dts = [], [T / 20, T / 40, T / 80]
    for dt in dts:
        res = run_direct(make(dt), MatrixSystem.oscillator(omega), [1.0], [0.0], T, 10**6)
        errs.append(abs(res.records[-1].u[0] - np.cos(omega * T)))
    rate = np.polyfit(np.log(dts), np.log(errs), 1)[0]
    assert rate == pytest.approx(order, abs=0.15)


def test_newmark_conserves_oscillator_energy():
    sysm = MatrixSystem.oscillator(5.0)
    res = run_direct(DirectIntegratorConfig.newmark(0.3), sysm, [1.0], [0.5], 30.0)
    totals = np.array([r.energy.total for r in res.records])
    assert np.abs(totals - totals[0]).max() < 1e-12 * totals[0]


def test_initial_acceleration_from_equilibrium():
    sysm = MatrixSystem([2.0], [[8.0]], load=[4.0], load_active=True)
    s = DirectIntegrator(sysm, DirectIntegratorConfig.newmark(0.1)).initial_state([1.0], [0.0])
    assert_allclose(s.a, [(4.0 - 8.0) / 2.0])


def test_step_helpers_agree():
    sysm = MatrixSystem.oscillator(1.0)
    s = DirectState(np.array([1.0]), np.array([0.0]), np.array([-1.0]))
    a = newmark_step(s, sysm, DirectIntegratorConfig.newmark(0.1))
    b = hht_step(s, sysm, DirectIntegratorConfig.hht(0.1, alpha=-0.1))
    assert abs(a.u[0] - np.cos(0.1)) < 1e-4 and abs(b.u[0] - np.cos(0.1)) < 1e-3
    with pytest.raises(ValueError):
        newmark_step(s, sysm, DirectIntegratorConfig.hht(0.1))


def test_static_solve_linear_and_svk():
    lin, P = beam_system(LinearElastic(LAM, MU, 1.0), traction=[0, 0, -0.1])
    u = static_solve(lin, P)
    H = lin.H()
    scale = abs(H).sum(axis=1).max() * np.linalg.norm(u)
    assert np.linalg.norm(H @ u - P) < 1e-12 * scale
    svk, P = beam_system(StVenantKirchhoff(LAM, MU, 1.0), traction=[0, 0, -0.1])
    u = static_solve(svk, P)
    assert np.linalg.norm(svk.internal_force(u) - P) < 1e-8 * np.linalg.norm(P)


def test_static_solve_reports_divergence():
    svk, P = beam_system(StVenantKirchhoff(LAM, MU, 1.0), traction=[0, 0, -2.0])
    with pytest.raises(NonConvergenceError):
        static_solve(svk, P, max_iters=30)


def test_svk_direct_variants_close():
    svk, _ = beam_system(StVenantKirchhoff(LAM, MU, 1.0), lengths=(1, 0.3, 0.3), divisions=(1, 1, 1))
    v0 = quadratic_velocity(svk, 1.0)
    u0 = np.zeros_like(v0)
    full = run_direct(DirectIntegratorConfig.newmark(1e-4), svk, u0, v0, 1e-3).records[-1].u
    lin = run_direct(DirectIntegratorConfig.newmark(1e-4, variant=LINEARLY_IMPLICIT),
                     svk, u0, v0, 1e-3).records[-1].u
    assert np.linalg.norm(full - lin) < 1e-3 * np.linalg.norm(full)


def test_run_direct_records():
    res = run_direct(DirectIntegratorConfig.newmark(0.1), MatrixSystem.oscillator(1.0),
                     [1.0], [0.0], 1.0, output_every=4, clock=lambda: 0.0)
    assert [r.step for r in res.records] == [4, 8, 10]
    assert all(r.m_used == 0 and np.isnan(r.epsilon_m) for r in res.records)

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from qgeo import evolution as ev
from qgeo import potential as qp
from qgeo.grid import DensityGrid, Grid, derivative
from qgeo.suites import madelung_case


def gauss_rho(grid, sigma=1.0):
    return DensityGrid.from_function(lambda *xs: np.exp(-sum(x * x for x in xs) / (2 * sigma**2)),
                                     grid)


def test_couplings():
    assert qp.lam_consistent(1.0) == 0.25
    assert qp.lam_printed(1.0) == 4.0
    assert qp.lam_printed(0.5) / qp.lam_consistent(0.5) == pytest.approx(16.0)


@pytest.mark.parametrize("hbar,mass,sigma", [(1.0, 1.0, 1.0), (0.5, 2.0, 1.4)])
def test_gaussian_q_closed_form(hbar, mass, sigma):
    g = Grid.uniform(1201, -12 * sigma, 12 * sigma)
    x = g.axes()[0]
    rho = gauss_rho(g, sigma)
    Q = qp.quantum_potential(rho, hbar, mass, accuracy=8)
    exact = -(hbar**2 / (2 * mass)) * (x**2 / (4 * sigma**4) - 1 / (2 * sigma**2))
    core = np.abs(x) < 5 * sigma
    assert_allclose(Q[core], exact[core], atol=1e-7)
    Qe = qp.quantum_potential_expanded(rho, hbar, mass, accuracy=8)
    assert_allclose(Qe[core], exact[core], atol=1e-6)


def test_expanded_with_metric():
    g = Grid.uniform(81, -8, 8, ndim=2)
    rho = DensityGrid.from_function(lambda x, y: np.exp(-(x * x + x * y + y * y) / 2), g)
    Q = qp.quantum_potential(rho, 1.0, 1.0, accuracy=6)
    Qe = qp.quantum_potential_expanded(rho, 1.0, 1.0, np.eye(2), accuracy=6)
    x, y = g.mesh()
    # the rho-derivative form loses accuracy in the tails, so compare on the core
    core = x * x + y * y < 9
    assert_allclose(Qe[core], Q[core], atol=1e-3)
    # scaling the inverse metric scales Q
    Q2 = qp.quantum_potential_expanded(rho, 1.0, 1.0, 2 * np.eye(2), accuracy=6)
    assert_allclose(Q2[core], 2 * Qe[core], rtol=1e-12)


def test_printed_form_factors():
    g = Grid.uniform(801, -10, 10)
    rho = gauss_rho(g)
    v = rho.values
    Q = qp.quantum_potential(rho, 1.0, 1.0, accuracy=8)
    d1 = derivative(v, 0, g.spacing[0], accuracy=8)
    d2 = derivative(v, 0, g.spacing[0], deriv=2, accuracy=8)
    core = np.abs(g.axes()[0]) < 4
    fv = -2 * (d1**2 / v**2 - 2 * d2 / v)
    ep = (1 / 8) * (2 * d2 / v - d1**2 / v**2)
    f = qp.printed_form_factors()
    assert_allclose(fv[core], f["fisher_variation"] * Q[core], atol=1e-6)
    assert_allclose(ep[core], f["expanded_positive"] * Q[core], atol=1e-7)


def test_q_masked_nodes_are_nan():
    g = Grid.uniform(201, -30, 30)
    Q = qp.quantum_potential(gauss_rho(g), 1.0)
    assert np.isnan(Q[0]) and np.isfinite(Q[100])
    with pytest.raises(TypeError):
        qp.quantum_potential(np.ones(3))


@pytest.mark.parametrize("ndim,n", [(1, 1201), (2, 161)])
def test_fisher_q_identity_gaussian(ndim, n):
    g = Grid.uniform(n, -12, 12, ndim=ndim)
    rep = qp.fisher_q_identity(gauss_rho(g), 1.0, 1.0, accuracy=8)
    assert rep.lhs == pytest.approx(ndim / 8, rel=1e-6)
    assert rep.relative_gap < 1e-6
    assert rep.relative_gap_negative_form == pytest.approx(2.0, rel=1e-6)
    assert abs(rep.boundary_term) < 1e-8


def test_fisher_q_identity_uniform_periodic():
    g = Grid.uniform(32, 0, 1, "periodic")
    rep = qp.fisher_q_identity(DensityGrid(np.ones(32), g), 1.0)
    assert rep.zero_consistent


@settings(max_examples=15)
@given(st.integers(0, 2**31 - 1))
def test_unwrap_matches_bfs(seed):
    rng = np.random.default_rng(seed)
    g = Grid.uniform(24, -3, 3, ndim=2)
    x, y = g.mesh()
    phase = 2 * np.tensordot(rng.normal(size=3), np.array([x, y, x * y]), 1)
    psi = np.exp(-(x * x + y * y) / 4 + 1j * phase)
    a, fa = qp.unwrap_phase(psi)
    b, fb = qp.unwrap_phase_bfs(psi)
    assert not fa.any() and not fb.any()
    assert_allclose(a, b, atol=1e-12)


def test_unwrap_flags_blocked_path():
    psi = np.exp(1j * np.linspace(0, 3, 9))
    psi[4] = 0
    _, flagged = qp.unwrap_phase(psi)
    assert flagged[4] and flagged[5:].all() and not flagged[:4].any()


def test_split_join_roundtrip():
    g = Grid.uniform(256, -20, 20, "periodic")
    w = ev.gaussian_packet(g, 1.0, k0=3.0)
    m = qp.madelung_split(w)
    back = qp.madelung_join(m)
    assert_allclose(back.psi, w.psi, atol=1e-12)
    with pytest.raises(ValueError):
        qp.Wavefield(2 * w.psi, g)


def test_harmonic_hj_residual_and_printed_coupling():
    ok = madelung_case("harmonic", 512, 2e-3)
    assert ok.hj < 1e-5 and ok.continuity < 1e-4 and ok.mass_drift < 1e-12
    g = Grid.uniform(512, -20, 20, "periodic")
    w = ev.gaussian_packet(g, np.sqrt(0.5), x0=1.0, V=ev.harmonic_potential(g))
    r = ev.evolve_se(w, 2e-3, 2, snapshot_every=1).snapshots
    bad = qp.madelung_residuals(r[0].field, r[1].field, r[2].field, 4e-3, lam=qp.lam_printed(1.0))
    assert bad.hj > 1.0


def test_residuals_need_time_derivatives():
    g = Grid.uniform(64, -10, 10, "periodic")
    m = qp.madelung_split(ev.gaussian_packet(g))
    with pytest.raises(ValueError):
        qp.hj_residual(m)
    with pytest.raises(ValueError):
        qp.continuity_residual(m)


def test_lagrangian_and_variation():
    g = Grid.uniform(256, -12, 12, "periodic")
    w = ev.gaussian_packet(g, 1.0, k0=0.7)
    m = qp.madelung_split(w)
    x = g.axes()[0]
    dS = -0.3 * np.exp(-x**2 / 8)
    rep = qp.quantum_lagrangian(m, None, dS)
    assert rep.fisher == pytest.approx(0.5, rel=1e-5)
    assert rep.information == pytest.approx(0.25 * rep.fisher)
    assert rep.hbar_from_c == pytest.approx(1.0)
    eta = np.exp(-(x - 0.5) ** 2) * np.cos(x)
    fd, pair = qp.lagrangian_variation(m, eta, None, dS, accuracy=8)
    assert fd == pytest.approx(pair, rel=1e-8)


def test_osmotic_relation():
    g = Grid.uniform(801, -12, 12)
    rep = qp.osmotic_checks(gauss_rho(g), 1.0, 1.0, accuracy=8)
    assert rep.max_residual < 1e-6
    assert rep.unscaled_max_residual > 0.1
    u = qp.osmotic_velocity(gauss_rho(g), 1.0, 1.0, accuracy=8)[0]
    x = g.axes()[0]
    core = np.abs(x) < 5
    assert_allclose(u[core], -0.5 * x[core], atol=1e-8)


def test_entropy_heat_kernel():
    g = Grid.uniform(2048, -40, 40)
    rho0 = gauss_rho(g)
    s0 = qp.entropy(rho0)
    assert s0 == pytest.approx(0.5 * np.log(2 * np.pi * np.e), rel=1e-10)
    dt = 1e-3
    snaps = [(t, ev.heat_spread(rho0, 0.5, t)) for t in (1 - dt, 1, 1 + dt)]
    er = qp.entropy_rate(snaps, 0.5)
    assert er.relative_gap[0] < 1e-5
    with pytest.raises(ValueError):
        qp.entropy_rate(snaps[:2], 0.5)

import json

import numpy as np
import pytest
from numpy.testing import assert_allclose

from qgeo import evolution as ev
from qgeo.grid import DensityGrid, Grid


@pytest.fixture(scope="module")
def ring():
    return Grid.uniform(256, -20, 20, "periodic")


def test_free_packet_width_matches_closed_form(ring):
    w = ev.gaussian_packet(ring, 1.0, k0=0.5)
    r = ev.evolve_se(w, 0.01, 100, snapshot_every=25)
    ts = np.array([s.t for s in r.snapshots])
    sig = np.array([s.sigma[0] for s in r.snapshots])
    assert_allclose(sig, ev.free_gaussian_sigma(ts, 1.0), atol=1e-12)
    assert_allclose([s.mean[0] for s in r.snapshots], 0.5 * ts, atol=1e-12)
    assert r.norm_drift < 1e-13
    assert r.energy_drift < 1e-12


def test_coherent_state_mean_second_order(ring):
    V = ev.harmonic_potential(ring)
    errs = []
    for dt in (0.1, 0.05, 0.025):
        w = ev.gaussian_packet(ring, np.sqrt(0.5), x0=1.0, V=V)
        r = ev.evolve_se(w, dt, int(round(2 / dt)))
        errs.append(abs(r.snapshots[-1].mean[0] - np.cos(2.0)))
    orders = np.log2(np.array(errs[:-1]) / errs[1:])
    assert_allclose(orders, 2.0, atol=0.05)


def test_spectral_and_implicit_agree(ring):
    w = ev.gaussian_packet(ring, 1.0, k0=0.5)
    a = ev.evolve_se(w, 0.01, 100).final
    b = ev.evolve_se(w, 0.01, 100, scheme="implicit", accuracy=8).final
    diff = np.sqrt(ring.integrate(np.abs(a.psi - b.psi) ** 2))
    assert diff < 1e-4
    with pytest.raises(ValueError):
        ev.evolve_se(w, 0.01, 1, scheme="euler")


def test_zero_steps_single_snapshot(ring):
    w = ev.gaussian_packet(ring)
    r = ev.evolve_se(w, 0.01, 0)
    assert len(r.snapshots) == 1 and r.final is w


@pytest.mark.parametrize("dt", [0.0, -0.1, float("nan")])
def test_invalid_dt_raises(ring, dt):
    with pytest.raises(ev.UnstableEvolution):
        ev.evolve_se(ev.gaussian_packet(ring), dt, 3)


def test_coarse_step_warns(ring):
    r = ev.evolve_se(ev.gaussian_packet(ring), 1.0, 1)
    assert any("kinetic phase" in s for s in r.warnings)


def test_default_dt_scales_with_mass_and_spacing(ring):
    base = ev.default_dt(ring)
    assert ev.default_dt(ring, mass=2.0) == pytest.approx(2 * base)
    assert ev.default_dt(ring, hbar=2.0) == pytest.approx(base / 2)
    assert ev.default_dt(ring.refined()) < base


@pytest.mark.parametrize("boundary", ["periodic", "decay"])
def test_laplacian_matrix(boundary):
    g = Grid.uniform(40, 0, 2 * np.pi, boundary, ndim=2) if boundary == "periodic" else \
        Grid.uniform(41, -3, 3, ndim=2)
    L = ev.laplacian_matrix(g, 6)
    assert abs(L - L.T).max() < 1e-9
    if boundary == "periodic":
        x, y = g.mesh()
        f = np.sin(x) * np.cos(2 * y)
        assert_allclose((L @ f.ravel()).reshape(g.shape), -5 * f, atol=1e-5)


def test_heat_spread_variance():
    g = Grid.uniform(1024, -30, 30)
    rho0 = DensityGrid.from_function(lambda x: np.exp(-x**2 / 2), g)
    x = g.axes()[0]
    r = ev.heat_spread(rho0, 0.5, 2.0)
    assert g.integrate(x * x * r.values) == pytest.approx(1 + 2 * 0.5 * 2.0, rel=1e-9)


def test_write_stream(tmp_path, ring):
    r = ev.evolve_se(ev.gaussian_packet(ring), 0.05, 4, snapshot_every=2)
    path = ev.write_stream(r, tmp_path, {"tag": 1})
    man = json.loads(path.read_text())
    assert man["tag"] == 1 and man["steps"] == 4 and len(man["snapshots"]) == 3
    data = np.loadtxt(tmp_path / man["snapshots"][-1]["file"], delimiter=",", skiprows=1)
    assert data.shape == (256, 3)
    assert_allclose(data[:, 1] + 1j * data[:, 2], r.final.psi, atol=0)

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from qgeo import config
from qgeo.hilbert import ChartPoint, basis, random_state, random_unitary, to_chart
from qgeo.kahler import (TangentVector, ambient_bracket, apply_J, contract_components,
                         fs_decomposition, fs_metric, fs_overlap_defect, geodesic_distance,
                         hermitian_bracket, homogeneous_form, metric_components,
                         nijenhuis_residual, potential_check, potential_pairing, pushforward,
                         random_tangent, symplectic_form, tangent_to_ambient)

seeds = st.integers(0, 2**31 - 1)
dims = st.integers(2, 8)


def setup(n, seed):
    rng = np.random.default_rng(seed)
    z = to_chart(random_state(n, seed))
    return z, random_tangent(z, rng), random_tangent(z, rng)


@given(dims, seeds)
def test_compatibility_triple(n, seed):
    z, v, w = setup(n, seed)
    assert fs_metric(z, v, w) == pytest.approx(symplectic_form(z, v, apply_J(w)), abs=1e-12)
    assert symplectic_form(z, v, w) == pytest.approx(fs_metric(z, apply_J(v), w), abs=1e-12)
    assert fs_metric(z, v, w) == pytest.approx(fs_metric(z, w, v), abs=1e-12)
    assert symplectic_form(z, v, w) == pytest.approx(-symplectic_form(z, w, v), abs=1e-12)


@given(dims, seeds)
def test_positive_definite(n, seed):
    z, v, _ = setup(n, seed)
    assert fs_metric(z, v, v) > 0


@given(dims, seeds)
def test_potential_reproduces_metric(n, seed):
    z, v, w = setup(n, seed)
    assert potential_check(z) < 1e-6
    pv = potential_pairing(z, v, w, nu=1.0)
    assert pv.g == pytest.approx(fs_metric(z, v, w, 1.0), abs=1e-6 * (1 + abs(pv.g)))
    assert pv.omega == pytest.approx(symplectic_form(z, v, w, 1.0), abs=1e-6 * (1 + abs(pv.omega)))


def test_nu_scaling():
    z, v, w = setup(3, 5)
    with config.using_hbar(2.5):
        g = fs_metric(z, v, w)
    assert g == pytest.approx(2.5 * fs_metric(z, v, w, 1.0))


def test_component_forms_agree():
    z, v, w = setup(4, 9)
    B = hermitian_bracket(z, v, w)
    assert contract_components(metric_components(z), v, w) == pytest.approx(B)
    x, eta = tangent_to_ambient(v)
    _, xi = tangent_to_ambient(w)
    assert homogeneous_form(x, eta, xi) == pytest.approx(B)
    assert ambient_bracket(x, eta, xi) == pytest.approx(B)


def test_geodesic_distance_values():
    assert geodesic_distance(basis(3, 1), basis(3, 2)) == pytest.approx(np.pi / 2)
    psi = random_state(3, 0)
    assert geodesic_distance(psi, psi) == pytest.approx(0.0, abs=1e-15)
    assert geodesic_distance(psi, 1j * psi.amplitudes) == pytest.approx(0.0, abs=1e-15)
    a = np.array([1.0, 0.0])
    b = np.array([np.cos(0.3), np.sin(0.3)])
    assert geodesic_distance(a, b) == pytest.approx(0.3)
    with pytest.raises(ValueError):
        geodesic_distance(a, np.ones(3))


@given(dims, seeds)
def test_geodesic_invariances(n, seed):
    a, b = random_state(n, seed), random_state(n, seed + 1)
    d = geodesic_distance(a, b)
    j, k = 1, n
    assert geodesic_distance(to_chart(a, j), to_chart(b, j)) == pytest.approx(d, abs=1e-10)
    assert geodesic_distance(to_chart(a, k), to_chart(b, k)) == pytest.approx(d, abs=1e-10)
    U = random_unitary(n, seed)
    assert geodesic_distance(U @ a.amplitudes, U @ b.amplitudes) == pytest.approx(d, abs=1e-12)


@given(dims, seeds)
def test_unitary_pushforward_is_isometry(n, seed):
    z, v, w = setup(n, seed)
    U = random_unitary(n, seed + 3)
    pv, pw = pushforward(U, v), pushforward(U, w)
    assert fs_metric(pv.base, pv, pw) == pytest.approx(fs_metric(z, v, w), rel=1e-9, abs=1e-9)
    assert symplectic_form(pv.base, pv, pw) == pytest.approx(symplectic_form(z, v, w), rel=1e-9,
                                                             abs=1e-9)


def test_infinitesimal_distance_matches_metric():
    # g(v, v) / (2 nu) is the squared Hilbert angle per unit step
    z, v, _ = setup(4, 2)
    x, eta = tangent_to_ambient(v)
    t = 1e-5
    d = geodesic_distance(x, x + t * eta)
    assert d**2 / t**2 == pytest.approx(fs_metric(z, v, v, 1.0) / 2, rel=1e-4)


def test_fs_decomposition_matches_overlap_defect():
    rng = np.random.default_rng(4)
    p = rng.dirichlet(np.ones(8))
    dp = p * rng.uniform(-1, 1, 8)
    dp -= p * dp.sum()
    dphi = rng.standard_normal(8)
    f, var = fs_decomposition(p, dp, dphi)
    assert var >= 0
    eps = 1e-4
    assert fs_overlap_defect(p, eps * dp, eps * dphi) / eps**2 == pytest.approx(f + var, rel=1e-3)
    # uniform phase shift carries no information
    assert fs_decomposition(p, dp, np.full(8, 0.7))[1] == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ValueError):
        fs_decomposition(np.zeros(8), dp, dphi)


def test_nijenhuis_vanishes():
    z, v, w = setup(3, 1)
    assert nijenhuis_residual(z, v, w) < 1e-10
    X = lambda c: np.array([c[0] * np.conj(c[1]), np.sin(c[0])])  # noqa: E731
    Y = lambda c: np.array([np.abs(c[1]) ** 2, c[0] ** 2])  # noqa: E731
    assert nijenhuis_residual(z, X, Y) < 1e-6


def test_tangent_validation():
    z = ChartPoint(1, np.zeros(2))
    with pytest.raises(ValueError):
        TangentVector(z, np.zeros(3))
    other = ChartPoint(2, np.zeros(2))
    with pytest.raises(ValueError):
        fs_metric(z, TangentVector(other, np.ones(2)), TangentVector(z, np.ones(2)))

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qgeo import observables as ob
from qgeo.hilbert import ChartPoint, random_hermitian, random_state, to_chart
from qgeo.kahler import (apply_J, fs_metric, geodesic_distance, random_tangent, symplectic_form,
                         tangent_to_ambient)

seeds = st.integers(0, 2**31 - 1)
dims = st.integers(2, 6)
nus = st.sampled_from([1.0, 0.5, 2.0])


def ops(n, seed, k=2):
    return [random_hermitian(n, seed + i) for i in range(k)]


@given(dims, seeds, nus)
def test_bracket_correspondences(n, seed, nu):
    A, B = ops(n, seed)
    x = random_state(n, seed + 7)
    rep = ob.bracket_report(A, B, x, nu)
    assert max(rep.lhs_rhs_residuals.values()) < 1e-9
    assert rep.kahler == pytest.approx(ob.kahler_bracket(A, B, x, nu), abs=1e-9)


@given(dims, seeds)
def test_jacobi_on_the_geometric_side(n, seed):
    A, B, C = (x.entries for x in ops(n, seed, 3))
    x = random_state(n, seed + 5)
    total = 0.0
    for P, Q, R in ((A, B, C), (B, C, A), (C, A, B)):
        total += ob.poisson_bracket_geometric(P, (Q @ R - R @ Q) / 1j, x, 1.0)
    assert abs(total) < 1e-8


@given(dims, seeds, nus)
def test_self_bracket_is_dispersion(n, seed, nu):
    (A,) = ops(n, seed, 1)
    x = random_state(n, seed + 1)
    assert ob.riemann_bracket_geometric(A, A, x, nu) == pytest.approx(
        2 / nu * ob.dispersion(A, x), abs=1e-10)
    assert ob.poisson_bracket(A, A, x, nu) == pytest.approx(0.0, abs=1e-12)


def test_hamiltonian_and_gradient_fields():
    n, nu = 4, 0.8
    (A,) = ops(n, 3, 1)
    p = to_chart(random_state(n, 4))
    X = ob.hamiltonian_field(A, p, nu)
    Y = ob.gradient_field(A, p, nu)
    rng = np.random.default_rng(0)
    for _ in range(5):
        eta = random_tangent(p, rng)
        dA = ob.differential_mean_chart(A, eta)
        assert symplectic_form(p, X, eta, nu) == pytest.approx(dA, abs=1e-12)
        assert fs_metric(p, Y, eta, nu) == pytest.approx(dA, abs=1e-12)
        x, amb = tangent_to_ambient(eta)
        assert ob.differential_mean(A, x, amb) == pytest.approx(dA, abs=1e-12)
    np.testing.assert_allclose(apply_J(X).components, Y.components, atol=1e-14)


def test_mean_value_chart_form():
    (A,) = ops(3, 2, 1)
    psi = random_state(3, 9)
    for k in (1, 2, 3):
        assert ob.mean_value_chart(A, to_chart(psi, k)) == pytest.approx(ob.mean_value(A, psi))
    f = ob.KahlerFunction(A)
    assert f(psi) == pytest.approx(ob.mean_value(A, psi))
    assert ob.mean_value(A, 3 * psi.amplitudes) == pytest.approx(ob.mean_value(A, psi))


@given(seeds, st.floats(-10, 10))
def test_flow_is_isometry_and_conserves_energy(seed, t):
    A, _ = ops(4, seed)
    x, y = random_state(4, seed + 1), random_state(4, seed + 2)
    fx, fy = ob.flow(A, t, x), ob.flow(A, t, y)
    assert geodesic_distance(fx, fy) == pytest.approx(geodesic_distance(x, y), abs=1e-8)
    assert ob.mean_value(A, fx) == pytest.approx(ob.mean_value(A, x), abs=1e-10)


def test_flow_derivative_is_poisson_bracket():
    A, B = ops(4, 21)
    x = random_state(4, 22)
    h = 1e-5
    fd = (ob.mean_value(B, ob.flow(A, h, x)) - ob.mean_value(B, ob.flow(A, -h, x))) / (2 * h)
    assert fd == pytest.approx(ob.poisson_bracket(B, A, x), abs=1e-8)


@given(dims, seeds)
def test_uncertainty(n, seed):
    A, B = ops(n, seed)
    x = random_state(n, seed + 3)
    u = ob.uncertainty_check(A, B, x)
    assert u.holds and u.slack >= -1e-10
    e = ob.uncertainty_check(A, A, x)
    assert e.lhs == pytest.approx(e.rhs, abs=1e-9)
    with pytest.raises(ValueError):
        ob.uncertainty_check(A, B, 2 * x.amplitudes)


def test_kahler_norm_is_largest_singular_value():
    for s in range(5):
        (A,) = ops(5, s, 1)
        smax = np.linalg.svd(A.entries, compute_uv=False)[0]
        assert ob.kahler_norm(A) == pytest.approx(smax, abs=1e-8)


@given(dims, seeds)
def test_stationarity(n, seed):
    (A,) = ops(n, seed, 1)
    w, V = np.linalg.eigh(A.entries)
    e = V[:, seed % n]
    assert ob.is_stationary(A, e)
    assert ob.differential_norm(A, e) < 1e-10
    x = random_state(n, seed + 1)
    r = A.entries @ x.amplitudes - ob.mean_value(A, x) * x.amplitudes
    assert ob.differential_norm(A, x) == pytest.approx(2 * np.linalg.norm(r), abs=1e-10)
    assert not ob.is_stationary(A, x)
    # the Hamiltonian field vanishes exactly at the stationary rays
    p = to_chart(e)
    assert np.abs(ob.hamiltonian_field(A, p).components).max() < 1e-10


def test_star_product_values():
    A, B = ops(3, 1)
    x = random_state(3, 2)
    s = ob.star_product(A, B, x)
    assert s == pytest.approx(np.vdot(x.amplitudes, A.entries @ B.entries @ x.amplitudes))
    assert ob.circ_product(A, B, x) == pytest.approx(s.real)
    with pytest.raises(ValueError):
        ob.mean_value(A, np.zeros(3))
    assert isinstance(to_chart(x), ChartPoint)

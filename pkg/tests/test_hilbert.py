import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from qgeo.hilbert import (ChartError, ChartPoint, HermitianOperator, StateVector, basis,
                          chart_transition, from_chart, from_vector_chart, inner_product,
                          metric_parts, random_hermitian, random_state, random_unitary, to_chart,
                          to_vector_chart, transition_jacobian)

seeds = st.integers(0, 2**31 - 1)
dims = st.integers(2, 8)


@given(dims, seeds)
def test_hermitian_symmetry(n, seed):
    a, b = random_state(n, seed), random_state(n, seed + 1)
    assert inner_product(a, b) == pytest.approx(np.conj(inner_product(b, a)), abs=1e-15)


@given(dims, seeds)
def test_chart_roundtrip_and_consistency(n, seed):
    psi = random_state(n, seed)
    reps = [from_chart(to_chart(psi, k)).amplitudes for k in range(1, n + 1)]
    for r in reps:
        assert abs(np.vdot(reps[0], r)) == pytest.approx(1.0, abs=1e-10)
    assert abs(np.vdot(psi.amplitudes, reps[0])) == pytest.approx(1.0, abs=1e-10)


@given(dims, seeds, st.floats(0, 2 * np.pi))
def test_ray_phase_invariance(n, seed, theta):
    psi = random_state(n, seed)
    a = to_chart(psi, 1).coords
    b = to_chart(np.exp(1j * theta) * psi.amplitudes, 1).coords
    assert_allclose(a, b, atol=1e-10)


def test_from_chart_phase_convention():
    p = ChartPoint(2, np.array([0.3 + 0.1j, -0.2j]))
    x = from_chart(p).amplitudes
    assert x[1].imag == 0 and x[1].real > 0
    assert np.linalg.norm(x) == pytest.approx(1.0)


def test_auto_chart_picks_largest_amplitude():
    psi = StateVector(np.array([0.1, 0.9, 0.3j]))
    assert to_chart(psi).chart_index == 2


def test_chart_errors():
    with pytest.raises(ChartError):
        to_chart(basis(3, 1), 2)
    with pytest.raises(ValueError):
        ChartPoint(4, np.zeros(2))
    with pytest.raises(ValueError):
        StateVector(np.zeros(3)).normalized()
    with pytest.raises(ValueError):
        random_state(1)


def test_chart_transition_is_holomorphic():
    p = to_chart(random_state(4, 3), 1)
    q = chart_transition(p, 3)
    assert q.chart_index == 3
    assert abs(np.vdot(from_chart(p).amplitudes, from_chart(q).amplitudes)) == pytest.approx(1.0)
    _, cr = transition_jacobian(p, 3)
    assert cr < 1e-8


def test_vector_chart_roundtrip():
    psi = random_state(5, 11)
    h = random_state(5, 12).amplitudes
    z = to_vector_chart(psi, h)
    assert abs(np.vdot(h, z)) < 1e-12
    assert abs(np.vdot(from_vector_chart(z, h).amplitudes, psi.amplitudes)) == pytest.approx(1.0)


def test_metric_parts_recombine():
    a, b = random_state(3, 1), random_state(3, 2)
    g, om = metric_parts(a, b, nu=0.7)
    assert (g + 1j * om) / 1.4 == pytest.approx(inner_product(a, b))


def test_random_operators():
    U = random_unitary(6, 0)
    assert_allclose(U.conj().T @ U, np.eye(6), atol=1e-13)
    A = random_hermitian(4, 0)
    assert_allclose(A.entries, A.entries.conj().T)
    with pytest.raises(ValueError):
        HermitianOperator(np.array([[0, 1], [0, 0]]))

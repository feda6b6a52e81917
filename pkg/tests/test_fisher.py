import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from qgeo import fisher as fi
from qgeo.grid import DensityGrid, Grid

seeds = st.integers(0, 2**31 - 1)


def gauss(sigma=1.0, mu=0.0):
    return lambda x: np.exp(-(x - mu) ** 2 / (2 * sigma**2))


@pytest.fixture(scope="module")
def line():
    return Grid.uniform(2001, -20, 20)


def test_probability_vector():
    p = fi.ProbabilityVector([0.5, 0.5, 0.0])
    assert p.clamped == 1 and p.p.min() > 0 and p.p.sum() == pytest.approx(1.0)
    with pytest.raises(ValueError):
        fi.ProbabilityVector([0.5, 0.6])
    with pytest.raises(ValueError):
        fi.ProbabilityVector([1.2, -0.2])
    assert fi.ProbabilityVector.from_weights([1, 3]).p == pytest.approx([0.25, 0.75])


@given(seeds)
def test_discrete_metric_and_sqrt_coordinates(seed):
    rng = np.random.default_rng(seed)
    p = rng.dirichlet(np.ones(6))
    dp = 1e-7 * p * rng.uniform(-1, 1, 6)
    dp -= p * dp.sum()
    a = fi.fisher_metric_discrete(p, dp)
    b = fi.sqrt_coordinate_metric(p, dp)
    assert a == pytest.approx(b, rel=1e-5)
    # statistical distance is half the sqrt-coordinate chord at leading order
    d = fi.statistical_distance(p, p + dp)
    assert 4 * d**2 == pytest.approx(b, rel=1e-5)


def test_unbalanced_perturbation_rejected():
    with pytest.raises(ValueError, match="unbalanced"):
        fi.fisher_metric_discrete([0.5, 0.5], [0.1, 0.1])


def test_statistical_distance_limits():
    assert fi.statistical_distance([1, 0], [0, 1]) == pytest.approx(np.pi / 2)
    assert fi.statistical_distance([0.3, 0.7], [0.3, 0.7]) == pytest.approx(0.0)
    with pytest.raises(ValueError):
        fi.statistical_distance([0.5, 0.5], [1 / 3] * 3)


def test_translation_fisher_gaussian(line):
    s = 1.7
    rho = DensityGrid.from_function(gauss(s), line)
    F, dX = fi.translation_fisher(rho)
    assert F == pytest.approx(1 / s**2, rel=1e-6)
    assert dX == pytest.approx(s, rel=1e-6)
    assert fi.cramer_rao_product(rho) == pytest.approx(1.0, rel=1e-6)
    I = fi.translation_fisher_matrix(rho, "half")
    assert I[0, 0] == pytest.approx(0.5 / s**2, rel=1e-6)


def test_cramer_rao_strict_for_mixture(line):
    rho = DensityGrid.from_function(lambda x: gauss(1.0, -2)(x) + 0.5 * gauss(0.7, 2)(x), line)
    assert fi.cramer_rao_product(rho) > 1.1


def test_cross_entropy_expansion(line):
    s = 1.3
    rho = DensityGrid.from_function(gauss(s), line)
    for dy in (0.2, 0.05):
        je, jq = fi.cross_entropy_expansion(rho, dy, accuracy=8)
        assert je == pytest.approx(dy**2 / (2 * s**2), rel=1e-8)
        assert jq == pytest.approx(je, rel=1e-8)
    skew = DensityGrid.from_function(lambda x: gauss(1.0, -0.5)(x) + 0.4 * gauss(0.5, 1.0)(x), line)
    gaps = []
    for dy in (0.1, 0.05, 0.025):
        je, jq = fi.cross_entropy_expansion(skew, dy, accuracy=8)
        gaps.append((je - jq) / dy**3)
    # cubic remainder: gap / dy^3 settles to a constant
    assert abs(gaps[-1] - gaps[-2]) < 0.1 * abs(gaps[-1]) + 1e-6
    assert fi.cross_entropy_expansion(skew, 0.0) == (0.0, 0.0)
    with pytest.raises(ValueError):
        fi.cross_entropy_expansion(skew, 10.0)


def test_fisher_matrix_gaussian_family():
    g = Grid.uniform(3001, -30, 30)
    fam = fi.ParametricFamily(lambda grid, th: DensityGrid.from_function(gauss(th[1], th[0]), grid),
                              2, g)
    s = 1.5
    I = fi.fisher_matrix(fam, [0.3, s], "classical")
    assert_allclose(I, np.diag([1 / s**2, 2 / s**2]), rtol=1e-6, atol=1e-8)
    Ih = fi.fisher_matrix(fam, [0.3, s])
    assert_allclose(Ih, 0.5 * I, rtol=1e-12)
    with pytest.raises(ValueError):
        fam([1.0])


def test_fisher_functional():
    g = Grid.uniform(121, -12, 12, ndim=2)
    rho = DensityGrid.from_function(lambda x, y: np.exp(-x**2 / 2 - y**2 / 4.5), g)
    assert fi.fisher_functional(rho, accuracy=6) == pytest.approx(0.5 * (1 + 1 / 2.25), rel=1e-6)
    gi = np.array([[2.0, 0.0], [0.0, 1.0]])
    assert fi.fisher_functional(rho, gi, accuracy=6) == pytest.approx(0.5 * (2 + 1 / 2.25), rel=1e-6)
    with pytest.raises(ValueError):
        fi.fisher_functional(rho, np.array([[1.0, 0.0], [0.0, -1.0]]))
    with pytest.raises(ValueError):
        fi.fisher_functional(rho, convention="other")


def test_binned_fisher_tends_to_classical():
    vals = [fi.binned_fisher(gauss(), -12, 12, n) for n in (64, 512)]
    assert abs(vals[1] - 1.0) < abs(vals[0] - 1.0)
    assert vals[1] == pytest.approx(1.0, abs=1e-3)


def test_exact_uncertainty_gaussian():
    g = Grid.uniform(1024, -20, 20, "periodic")
    x = g.axes()[0]
    psi = np.exp(-x**2 / 4 + 1j * (0.5 * x + 0.3 * x**2))
    psi /= np.sqrt(g.integrate(np.abs(psi) ** 2))
    b = fi.exact_uncertainty(psi, g, hbar=1.0)
    assert b.product == pytest.approx(0.5, abs=1e-6)
    assert b.mean_p == pytest.approx(b.mean_p_classical, abs=1e-8)
    assert b.mean_p == pytest.approx(0.5, abs=1e-8)
    # chirp adds the classical spread: dp^2 = dp_cl^2 + dp_nc^2
    assert b.delta_p**2 == pytest.approx(b.delta_p_classical**2 + b.delta_p_nonclassical**2)
    assert b.delta_p_classical == pytest.approx(0.6, rel=1e-6)
    assert b.chain_holds
    with pytest.raises(ValueError):
        fi.exact_uncertainty(2 * psi, g)

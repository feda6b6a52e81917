"""Observables as Kähler functions on projective space.

A Hermitian ``A`` defines the mean-value function ``<A>[x] = (x|Ax)/|x|^2``.
Every bracket and product is evaluated twice: from operator expectations and
from the chart geometry (Hamiltonian and gradient vector fields paired with
``omega`` and ``g``).

Orientation conventions (checked by the test-suite):

* ``X_A = I d<A>`` satisfies ``omega(X_A, eta) = d<A>(eta)``;
* ``Y_A = G d<A>`` satisfies ``g(Y_A, eta) = d<A>(eta)`` and ``Y_A = J X_A``;
* ``{f, h} = omega(X_f, X_h)`` and along the flow of ``A``
  ``d/dt <B> = {<B>, <A>}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import config
from .hilbert import ChartPoint, HermitianOperator, StateVector, as_array, to_chart
from .kahler import TangentVector, fs_metric, symplectic_form


def _mat(A) -> np.ndarray:
    if isinstance(A, HermitianOperator):
        return A.entries
    return np.asarray(A, dtype=complex)


def _vec(x) -> np.ndarray:
    v = as_array(x)
    if not np.any(v):
        raise ValueError("the zero vector has no ray")
    return v


def _expect(M: np.ndarray, x: np.ndarray) -> complex:
    return complex(np.vdot(x, M @ x) / np.vdot(x, x).real)


@dataclass(frozen=True)
class KahlerFunction:
    """The function ``[x] -> <A>[x]``."""

    operator: HermitianOperator

    def __call__(self, x) -> float:
        return mean_value(self.operator, x)


def mean_value(A, x) -> float:
    return _expect(_mat(A), _vec(x)).real


def mean_value_chart(A, p: ChartPoint) -> float:
    """Chart form ``(z+h|A(z+h)) / (1 + |z|^2)`` with ``h = e_k``."""
    x = p.lift()
    s = 1.0 + np.vdot(p.coords, p.coords).real
    return float(np.vdot(x, _mat(A) @ x).real / s)


def dispersion(A, x) -> float:
    """Square dispersion ``<(A - <A>)^2>``, computed as ``|(A - <A>) x|^2``."""
    M, v = _mat(A), _vec(x)
    r = M @ v - _expect(M, v).real * v
    return float(np.vdot(r, r).real / np.vdot(v, v).real)


def std_dev(A, x) -> float:
    return float(np.sqrt(max(dispersion(A, x), 0.0)))


def differential_mean(A, x, eta) -> float:
    """Directional derivative of ``<A>`` at ``x`` along the ambient vector
    ``eta``."""
    M, v = _mat(A), _vec(x)
    eta = np.asarray(eta, dtype=complex)
    n2 = np.vdot(v, v).real
    mean = np.vdot(v, M @ v).real / n2
    return float(2 * (np.vdot(v, M @ eta).real - mean * np.vdot(v, eta).real) / n2)


def differential_mean_chart(A, v: TangentVector) -> float:
    """Chart expression of ``d<A>`` paired with the tangent ``v``:

        2 Re( A(z+h)/s - (h|A(z+h))/s h - (A(z+h)|z+h)/s^2 z | v )
    """
    p = v.base
    M = _mat(A)
    x = p.lift()
    z = p.embedded()
    h = np.zeros_like(x)
    h[p.chart_index - 1] = 1.0
    s = 1.0 + np.vdot(z, z).real
    Ax = M @ x
    covec = Ax / s - np.vdot(h, Ax) / s * h - np.vdot(Ax, x) / s**2 * z
    vv = np.insert(v.components, p.chart_index - 1, 0.0)
    return float(2 * np.vdot(covec, vv).real)


def _chart_fields(A, p: ChartPoint, nu: float) -> tuple[np.ndarray, np.ndarray]:
    M = _mat(A)
    x = p.lift()
    k = p.chart_index - 1
    Ax = M @ x
    c = Ax[k]  # (h|A(z+h))
    X = (1j * c * x - 1j * Ax) / nu
    Y = (-c * x + Ax) / nu
    return np.delete(X, k), np.delete(Y, k)


def hamiltonian_field(A, p: ChartPoint, nu: float | None = None) -> TangentVector:
    """``X = (1/nu) (i (h|A(z+h)) (z+h) - i A(z+h))`` in chart coordinates."""
    X, _ = _chart_fields(A, p, config.resolve(nu))
    return TangentVector(p, X)


def gradient_field(A, p: ChartPoint, nu: float | None = None) -> TangentVector:
    """``Y = (1/nu) (-(h|A(z+h)) (z+h) + A(z+h))`` in chart coordinates."""
    _, Y = _chart_fields(A, p, config.resolve(nu))
    return TangentVector(p, Y)


def _chart(x) -> ChartPoint:
    return x if isinstance(x, ChartPoint) else to_chart(_vec(x))


# ---------------------------------------------------------------------------
# brackets and products, operator side

def poisson_bracket(A, B, x, nu: float | None = None) -> float:
    """``<(1/(i nu)) [A, B]>``."""
    nu = config.resolve(nu)
    M, N, v = _mat(A), _mat(B), _vec(x)
    return (_expect(M @ N - N @ M, v) / (1j * nu)).real


def riemann_bracket(A, B, x, nu: float | None = None) -> float:
    """``(1/nu) <AB + BA> - (2/nu) <A><B>``."""
    nu = config.resolve(nu)
    M, N, v = _mat(A), _mat(B), _vec(x)
    return (_expect(M @ N + N @ M, v).real - 2 * _expect(M, v).real * _expect(N, v).real) / nu


def kahler_bracket(A, B, x, nu: float | None = None) -> complex:
    """``(2/nu) (<AB> - <A><B>)``."""
    nu = config.resolve(nu)
    M, N, v = _mat(A), _mat(B), _vec(x)
    return 2 * (_expect(M @ N, v) - _expect(M, v).real * _expect(N, v).real) / nu


def circ_product(A, B, x) -> float:
    """Jordan product ``<(AB + BA)/2>``."""
    M, N, v = _mat(A), _mat(B), _vec(x)
    return 0.5 * _expect(M @ N + N @ M, v).real


def star_product(A, B, x) -> complex:
    """``<AB>``."""
    return _expect(_mat(A) @ _mat(B), _vec(x))


# ---------------------------------------------------------------------------
# brackets, geometric side

def poisson_bracket_geometric(A, B, x, nu: float | None = None) -> float:
    """``omega(X_A, X_B)`` evaluated in a chart."""
    nu = config.resolve(nu)
    p = _chart(x)
    return symplectic_form(p, hamiltonian_field(A, p, nu), hamiltonian_field(B, p, nu), nu)


def riemann_bracket_geometric(A, B, x, nu: float | None = None) -> float:
    """``g(Y_A, Y_B)`` evaluated in a chart."""
    nu = config.resolve(nu)
    p = _chart(x)
    return fs_metric(p, gradient_field(A, p, nu), gradient_field(B, p, nu), nu)


def circ_from_brackets(A, B, x, nu: float | None = None) -> float:
    """``f o h = (nu/2) ((f, h)) + f h`` with the geometric Riemann bracket."""
    nu = config.resolve(nu)
    return 0.5 * nu * riemann_bracket_geometric(A, B, x, nu) + mean_value(A, x) * mean_value(B, x)


def star_from_brackets(A, B, x, nu: float | None = None) -> complex:
    """``f * h = (nu/2) <f, h> + f h`` with the geometric Kähler bracket."""
    nu = config.resolve(nu)
    kb = riemann_bracket_geometric(A, B, x, nu) + 1j * poisson_bracket_geometric(A, B, x, nu)
    return 0.5 * nu * kb + mean_value(A, x) * mean_value(B, x)


@dataclass
class BracketReport:
    poisson: float
    riemann: float
    kahler: complex
    lhs_rhs_residuals: dict = field(default_factory=dict)


def bracket_report(A, B, x, nu: float | None = None) -> BracketReport:
    """Both sides of the bracket/product correspondences at ``x``."""
    nu = config.resolve(nu)
    pb = poisson_bracket_geometric(A, B, x, nu)
    rb = riemann_bracket_geometric(A, B, x, nu)
    kb = rb + 1j * pb
    star = star_product(A, B, x)
    circ = circ_product(A, B, x)
    star_ba = star_product(B, A, x)
    res = {
        "poisson_vs_commutator": abs(pb - poisson_bracket(A, B, x, nu)),
        "riemann_vs_anticommutator": abs(rb - riemann_bracket(A, B, x, nu)),
        "kahler_vs_covariance": abs(kb - kahler_bracket(A, B, x, nu)),
        "circ_vs_jordan": abs(circ_from_brackets(A, B, x, nu) - circ),
        "star_vs_product": abs(star_from_brackets(A, B, x, nu) - star),
        "star_split": abs(star - circ - 0.5j * nu * pb),
        "circ_symmetrized_star": abs(circ - 0.5 * (star + star_ba)),
        "poisson_from_star": abs(pb - ((star - star_ba) / (1j * nu)).real)
                             + abs(((star - star_ba) / (1j * nu)).imag),
    }
    return BracketReport(pb, rb, kb, {k: float(v) for k, v in res.items()})


# ---------------------------------------------------------------------------
# uncertainty

@dataclass(frozen=True)
class UncertaintyReport:
    lhs: float
    rhs: float
    commutator_term: float
    covariance: float
    slack: float

    @property
    def holds(self) -> bool:
        return self.slack >= -1e-10


def uncertainty_check(A, B, x, nu: float | None = None) -> UncertaintyReport:
    """Product of dispersions against
    ``(nu/2 {F,K})^2 + ({F,K}_+ - F K)^2`` with ``{F,K}_+ = (nu/2) G(X_F, X_K)``.
    """
    nu = config.resolve(nu)
    v = as_array(x)
    if abs(np.vdot(v, v).real - 1.0) > 1e-12:
        raise ValueError("uncertainty check needs a normalized state")
    lhs = dispersion(A, v) * dispersion(B, v)
    comm = 0.5 * nu * poisson_bracket_geometric(A, B, v, nu)
    jordan = 0.5 * nu * riemann_bracket_geometric(A, B, v, nu) + mean_value(A, v) * mean_value(B, v)
    cov = jordan - mean_value(A, v) * mean_value(B, v)
    rhs = comm**2 + cov**2
    return UncertaintyReport(lhs, rhs, comm, cov, lhs - rhs)


# ---------------------------------------------------------------------------
# flows and norms

def flow_unitary(A, t: float, nu: float | None = None) -> np.ndarray:
    """``exp(-i (t/nu) A)`` from the eigendecomposition of ``A``."""
    nu = config.resolve(nu)
    w, V = np.linalg.eigh(_mat(A))
    return (V * np.exp(-1j * (t / nu) * w)) @ V.conj().T


def flow(A, t: float, x, nu: float | None = None) -> StateVector:
    return StateVector(flow_unitary(A, t, nu) @ as_array(x))


def kahler_norm(A, restarts: int = 64, seed=0, max_iter: int = 20000,
                tol: float = 1e-15) -> float:
    """``sqrt(sup <A^dagger A>)`` by projected power iteration from random
    starting rays; the best restart is returned."""
    M = _mat(A)
    P = M.conj().T @ M
    rng = np.random.default_rng(seed)
    n = P.shape[0]
    best = 0.0
    for _ in range(restarts):
        x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        x /= np.linalg.norm(x)
        val = np.vdot(x, P @ x).real
        for _ in range(max_iter):
            y = P @ x
            ny = np.linalg.norm(y)
            if ny == 0:
                break
            x = y / ny
            new = np.vdot(x, P @ x).real
            if abs(new - val) <= tol * max(new, 1.0):
                val = new
                break
            val = new
        best = max(best, val)
    return float(np.sqrt(best))


def differential_norm(A, x) -> float:
    """Operator norm of ``d<A>`` on the horizontal space at a normalized
    ``x``; equals ``2 |(A - <A>) x|``."""
    v = as_array(x)
    M = _mat(A)
    n = v.size
    best = 0.0
    # the sup over unit eta of 2 Re (A_perp x | eta) is attained at eta = A_perp x
    r = M @ v - mean_value(M, v) * v
    nr = np.linalg.norm(r)
    if nr > 0:
        best = differential_mean(M, v, r / nr)
    for j in range(n):
        for e in (np.eye(n)[j], 1j * np.eye(n)[j]):
            best = max(best, abs(differential_mean(M, v, e)))
    return float(best)


def is_stationary(A, x, tol: float = 1e-10) -> bool:
    """True iff ``|A x - <A> x| < tol``: ``x`` is an eigenvector, the ray is
    a critical point of ``<A>`` and a fixed point of its Hamiltonian flow."""
    v = as_array(x)
    if abs(np.linalg.norm(v) - 1.0) > 1e-12:
        raise ValueError("is_stationary needs a normalized state")
    M = _mat(A)
    return bool(np.linalg.norm(M @ v - mean_value(M, v) * v) < tol)

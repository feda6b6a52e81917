"""Fisher information, discrete and on grids.

Two prefactor conventions are exposed.  ``"half"`` (the default) keeps the
``1/2`` in front of the Fisher matrix and functional, so a unit Gaussian has
``I = 1/2``.  ``"classical"`` drops it and matches the textbook ``1/sigma^2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import config
from .grid import DensityGrid, Grid, gradient, spectral_derivative

PROB_FLOOR = 1e-12
SUM_TOL = 1e-12
# nodes where |psi| (or sqrt(rho)) falls below this fraction of its max are masked
MASK_LEVEL = 1e-10

CONVENTIONS = {"half": 0.5, "classical": 1.0}


def _prefactor(convention: str) -> float:
    try:
        return CONVENTIONS[convention]
    except KeyError:
        raise ValueError(f"unknown convention {convention!r}; use one of {sorted(CONVENTIONS)}")


# ---------------------------------------------------------------------------
# discrete distributions

@dataclass(frozen=True, eq=False)
class ProbabilityVector:
    """Strictly positive probabilities summing to one.

    Entries below ``PROB_FLOOR`` are clamped and the vector renormalized;
    ``clamped`` counts them so the policy is never silent.
    """

    p: np.ndarray
    clamped: int = 0

    def __post_init__(self):
        p = np.array(self.p, dtype=float)
        if p.ndim != 1 or p.size < 1:
            raise ValueError("probabilities must be a non-empty 1-D array")
        if not np.all(np.isfinite(p)) or np.any(p < 0):
            raise ValueError("probabilities must be finite and nonnegative")
        if abs(p.sum() - 1.0) > SUM_TOL * max(1, p.size):
            raise ValueError(f"probabilities sum to {p.sum()!r}, not 1")
        n = int(np.count_nonzero(p < PROB_FLOOR))
        if n:
            p = np.maximum(p, PROB_FLOOR)
            p /= p.sum()
        p.setflags(write=False)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "clamped", self.clamped + n)

    @classmethod
    def from_weights(cls, w) -> "ProbabilityVector":
        w = np.asarray(w, dtype=float)
        return cls(w / w.sum())

    def __len__(self):
        return self.p.size


def _probs(p) -> np.ndarray:
    return p.p if isinstance(p, ProbabilityVector) else ProbabilityVector(p).p


def fisher_metric_discrete(p, dp) -> float:
    """``sum dp_j^2 / p_j`` for a balanced perturbation."""
    p = _probs(p)
    dp = np.asarray(dp, dtype=float)
    if dp.shape != p.shape:
        raise ValueError("perturbation length differs from p")
    if abs(dp.sum()) > SUM_TOL:
        raise ValueError(f"perturbation is unbalanced: sum(dp) = {dp.sum()!r}")
    return float(np.sum(dp**2 / p))


def sqrt_coordinate_metric(p, dp) -> float:
    """``4 sum (sqrt(p + dp) - sqrt(p))^2``; agrees with the Fisher metric to
    third order in ``dp``."""
    p = _probs(p)
    dp = np.asarray(dp, dtype=float)
    # difference of square roots without cancellation
    d = dp / (np.sqrt(p + dp) + np.sqrt(p))
    return float(4 * np.sum(d**2))


def statistical_distance(p1, p2) -> float:
    """Bhattacharyya angle ``arccos sum sqrt(p1 p2)`` in ``[0, pi/2]``.

    Evaluated as ``2 arcsin(|sqrt p1 - sqrt p2| / 2)``, which is the same
    angle and stays accurate when the two distributions are close.
    """
    a, b = (np.asarray(_raw(p), dtype=float) for p in (p1, p2))
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.size} vs {b.size}")
    d = np.linalg.norm(np.sqrt(a) - np.sqrt(b))
    return float(2 * np.arcsin(min(d / 2, np.sqrt(0.5))))


def _raw(p):
    # disjoint supports are legal for the distance, so no floor here
    if isinstance(p, ProbabilityVector):
        return p.p
    p = np.asarray(p, dtype=float)
    if np.any(p < 0) or abs(p.sum() - 1) > SUM_TOL * max(1, p.size):
        raise ValueError("not a probability vector")
    return p


# ---------------------------------------------------------------------------
# densities on grids

def _density(rho) -> DensityGrid:
    if not isinstance(rho, DensityGrid):
        raise TypeError("expected a DensityGrid")
    return rho


def _log_ratio_integral(a: np.ndarray, b: np.ndarray, grid: Grid) -> float:
    top = max(a.max(), b.max())
    keep = (a > PROB_FLOOR * top) & (b > PROB_FLOOR * top)
    integrand = np.zeros_like(a)
    integrand[keep] = a[keep] * np.log(a[keep] / b[keep])
    return float(grid.integrate(integrand))


def shifted(rho: DensityGrid, shift) -> np.ndarray:
    """``P(y + shift)`` by Fourier interpolation."""
    grid = rho.grid
    shift = np.broadcast_to(np.asarray(shift, dtype=float), (grid.ndim,))
    if not grid.periodic:
        for s, n, h in zip(shift, grid.shape, grid.spacing):
            if abs(s) > 0.1 * (n - 1) * h:
                raise ValueError("shift too large for a decay boundary")
    fk = np.fft.fftn(rho.values)
    for ax, k in enumerate(grid.wavenumbers()):
        shape = [1] * grid.ndim
        shape[ax] = -1
        fk = fk * np.exp(1j * k * shift[ax]).reshape(shape)
    return np.fft.ifftn(fk).real


def cross_entropy_expansion(rho: DensityGrid, shift, convention: str = "half",
                            accuracy: int = 4) -> tuple[float, float]:
    """Relative entropy of a translated density and its quadratic model.

    ``J_exact = int P(y+dy) log(P(y+dy)/P(y))`` and
    ``J_quadratic = I_jk dy^j dy^k`` with the translation Fisher matrix.
    Under the ``"half"`` convention the two agree to third order.
    """
    rho = _density(rho)
    shift = np.broadcast_to(np.asarray(shift, dtype=float), (rho.ndim,))
    if not np.any(shift):
        return 0.0, 0.0
    moved = shifted(rho, shift)
    j_exact = _log_ratio_integral(moved, rho.values, rho.grid)
    I = translation_fisher_matrix(rho, convention, accuracy)
    return j_exact, float(shift @ I @ shift)


def _inv_density(rho: DensityGrid) -> tuple[np.ndarray, np.ndarray]:
    v = rho.values
    keep = v > MASK_LEVEL**2 * v.max()
    inv = np.zeros_like(v)
    inv[keep] = 1.0 / v[keep]
    return inv, keep


def translation_fisher_matrix(rho: DensityGrid, convention: str = "half",
                              accuracy: int = 4) -> np.ndarray:
    """``c int (1/P) d_jP d_kP`` with ``c`` set by the convention."""
    rho = _density(rho)
    c = _prefactor(convention)
    g = gradient(rho.values, rho.grid, accuracy)
    inv, _ = _inv_density(rho)
    n = rho.ndim
    I = np.empty((n, n))
    for j in range(n):
        for k in range(j, n):
            I[j, k] = I[k, j] = c * rho.grid.integrate(g[j] * g[k] * inv)
    return I


@dataclass(frozen=True)
class ParametricFamily:
    """``evaluator(grid, theta) -> DensityGrid`` (or a raw array)."""

    evaluator: Callable
    n_params: int
    grid: Grid

    def __call__(self, theta) -> DensityGrid:
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.n_params,):
            raise ValueError(f"expected {self.n_params} parameters")
        out = self.evaluator(self.grid, theta)
        if not isinstance(out, DensityGrid):
            out = DensityGrid(out, self.grid)
        return out


def fisher_matrix(family: ParametricFamily, theta, convention: str = "half",
                  step: float | None = None) -> np.ndarray:
    """``c int (1/P) dP/dtheta_j dP/dtheta_k`` with central differences in
    ``theta`` of step ``1e-5 (1 + |theta|)``."""
    c = _prefactor(convention)
    theta = np.asarray(theta, dtype=float)
    base = family(theta)
    inv, _ = _inv_density(base)
    derivs = []
    for j in range(family.n_params):
        h = step if step is not None else 1e-5 * (1 + abs(theta[j]))
        e = np.zeros_like(theta)
        e[j] = h
        d = (family(theta + e).values - family(theta - e).values) / (2 * h)
        if not np.all(np.isfinite(d)):
            raise FloatingPointError(f"non-finite derivative along parameter {j}")
        derivs.append(d)
    n = family.n_params
    I = np.empty((n, n))
    for j in range(n):
        for k in range(j, n):
            I[j, k] = I[k, j] = c * base.grid.integrate(derivs[j] * derivs[k] * inv)
    if not np.all(np.isfinite(I)):
        raise FloatingPointError("Fisher matrix quadrature failed")
    return I


def fisher_functional(rho: DensityGrid, inverse_metric=None, convention: str = "half",
                      accuracy: int = 4) -> float:
    """``(g^ik / 2) int (1/rho) d_i rho d_k rho`` for a constant inverse
    metric (identity by default)."""
    rho = _density(rho)
    n = rho.ndim
    gi = np.eye(n) if inverse_metric is None else np.atleast_2d(np.asarray(inverse_metric, float))
    if gi.shape != (n, n):
        raise ValueError(f"inverse metric must be {n}x{n}")
    if not np.allclose(gi, gi.T, atol=1e-14):
        raise ValueError("inverse metric is not symmetric")
    if np.linalg.eigvalsh(gi).min() < -1e-12:
        raise ValueError("inverse metric is not positive semi-definite")
    I = translation_fisher_matrix(rho, convention, accuracy)
    return float(np.sum(gi * I))


def binned_fisher(rho_func: Callable, lo: float, hi: float, nbins: int,
                  delta: float = 1e-4) -> float:
    """Discrete Fisher metric of the binned density under a translation by
    ``delta``, divided by ``delta^2``.

    Bin masses come from a fine midpoint rule; as ``nbins`` grows this tends
    to the classical ``int (rho')^2 / rho``.
    """
    edges = np.linspace(lo, hi, nbins + 1)
    sub = 16

    def masses(shift):
        t = (np.arange(sub) + 0.5) / sub
        x = edges[:-1, None] + (edges[1:] - edges[:-1])[:, None] * t[None, :]
        return rho_func(x - shift).mean(axis=1) * np.diff(edges)

    p = masses(0.0)
    dp = (masses(delta) - masses(-delta)) / 2
    total = p.sum()
    p, dp = p / total, dp / total
    keep = p > PROB_FLOOR
    return float(np.sum(dp[keep] ** 2 / p[keep]) / delta**2)


def translation_fisher(P: DensityGrid, accuracy: int = 4) -> tuple[float, float]:
    """``F_X = int P ((log P)')^2`` and the Fisher length ``F_X^{-1/2}``."""
    P = _density(P)
    if P.ndim != 1:
        raise ValueError("translation Fisher information is defined for 1-D densities")
    F = float(translation_fisher_matrix(P, "classical", accuracy)[0, 0])
    if not F > 0:
        raise ValueError("degenerate density: zero translation Fisher information")
    return F, F**-0.5


def variance(P: DensityGrid) -> float:
    x = P.grid.axes()[0]
    m = P.grid.integrate(P.values)
    mu = P.grid.integrate(x * P.values) / m
    return float(P.grid.integrate((x - mu) ** 2 * P.values) / m)


def cramer_rao_product(P: DensityGrid, accuracy: int = 4) -> float:
    """``Var(X) F_X``, at least one with equality for Gaussians."""
    F, _ = translation_fisher(P, accuracy)
    return variance(P) * F


# ---------------------------------------------------------------------------
# exact uncertainty

@dataclass
class UncertaintyBudget:
    delta_x: float          # root-mean-square deviation
    fisher_length: float    # F_X^{-1/2}
    delta_p: float
    delta_p_classical: float
    delta_p_nonclassical: float
    mean_p: float
    mean_p_classical: float
    p_classical: np.ndarray  # nan on masked nodes
    masked: int
    product: float          # fisher_length * delta_p_nonclassical

    @property
    def chain_holds(self) -> bool:
        """``dX dp >= deltaX dp >= deltaX dp_nc`` (with rounding slack)."""
        a = self.delta_x * self.delta_p
        b = self.fisher_length * self.delta_p
        c = self.product
        return a >= b * (1 - 1e-9) and b >= c * (1 - 1e-9)


def exact_uncertainty(psi, grid: Grid, hbar: float | None = None) -> UncertaintyBudget:
    """Momentum budget of a 1-D wavefunction.

    All derivatives are spectral, so ``<p>`` from the Fourier transform and
    ``<p_cl>`` from ``p_cl = hbar Im(conj(psi) psi') / |psi|^2`` use the same
    differentiation.  Nodes with ``|psi| < 1e-10 max|psi|`` are masked.
    """
    hbar = config.resolve(hbar)
    psi = np.asarray(psi, dtype=complex)
    if grid.ndim != 1 or psi.shape != grid.shape:
        raise ValueError("exact_uncertainty needs a 1-D wavefunction on the grid")
    rho = np.abs(psi) ** 2
    norm = grid.integrate(rho)
    if abs(norm - 1) > 1e-8:
        raise ValueError(f"wavefunction is not normalized (mass {norm!r})")
    amp = np.abs(psi)
    keep = amp >= MASK_LEVEL * amp.max()
    x = grid.axes()[0]

    k = grid.wavenumbers()[0]
    wk = np.abs(np.fft.fft(psi)) ** 2
    wk /= wk.sum()
    mean_p = float(hbar * np.sum(k * wk))
    delta_p = float(hbar * np.sqrt(max(np.sum(k**2 * wk) - np.sum(k * wk) ** 2, 0.0)))

    dpsi = spectral_derivative(psi, grid, 0)
    w = np.where(keep, rho, 0.0)
    p_cl = np.full(psi.shape, np.nan)
    p_cl[keep] = hbar * (np.conj(psi[keep]) * dpsi[keep]).imag / rho[keep]
    pc = np.where(keep, p_cl, 0.0)
    mean_pc = float(grid.integrate(w * pc))
    var_pc = max(float(grid.integrate(w * pc**2)) - mean_pc**2, 0.0)

    # F_X = int (rho')^2 / rho = 4 int |(|psi|)'|^2 on the kept nodes
    drho = 2 * (np.conj(psi) * dpsi).real
    F = float(grid.integrate(np.where(keep, drho**2 / np.where(keep, rho, 1.0), 0.0)))
    if not F > 0:
        raise ValueError("degenerate density: zero translation Fisher information")
    dX = F**-0.5
    mu = grid.integrate(x * rho)
    delta_x = float(np.sqrt(grid.integrate((x - mu) ** 2 * rho)))
    dp_nc = float(np.sqrt(max(delta_p**2 - var_pc, 0.0)))
    return UncertaintyBudget(delta_x, dX, delta_p, float(np.sqrt(var_pc)), dp_nc,
                             mean_p, mean_pc, p_cl, int(np.count_nonzero(~keep)), dX * dp_nc)

"""Weyl geometry on sampled metrics and gauge fields.

Index conventions:

* ``Gamma^i_kl = -{i, kl} + delta^i_k phi_l + delta^i_l phi_k - g_kl phi^i``
  (minus the Christoffel symbol plus the gauge terms);
* ``A^k_{,i} = d_i A^k - Gamma^k_il A^l`` and ``A_{k,i} = d_i A_k + Gamma^l_ik A_l``;
* ``R^i_mkl = -d_l Gamma^i_mk + d_k Gamma^i_ml + Gamma^i_nl Gamma^n_mk - Gamma^i_nk Gamma^n_ml``,
  ``R_ik = R^l_ilk``, ``R = g^ik R_ik``.

With these, ``A^i_{,k,l} - A^i_{,l,k} = R^i_mkl A^m`` and
``R = Rdot + (n-1)((n-2) phi.phi - 2 div phi)`` hold exactly, where ``Rdot``
is the same chain evaluated at ``phi = 0``.  Because the connection carries
``-{}``, that ``Rdot`` is minus the textbook scalar curvature (``-2/a^2``
on a sphere of radius ``a``); :func:`riemannian_scalar_standard` gives the
textbook value.

Tensor arrays put component indices first and grid axes last.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import config
from .grid import DensityGrid, Grid, derivative, read_grid_csv
from .potential import amplitude_mask, density_mask, fisher_trace, masked_integral, quantum_potential


def gamma_weyl(n: int) -> float:
    """``(1/6)(n-2)/(n-1)``; ``1/12`` for ``n = 3``."""
    if n < 2:
        raise ValueError("dimension must be at least 2")
    return (n - 2) / (6 * (n - 1))


def gamma_chain(n: int) -> float:
    """``(n-2) / (8(n-1))``, the coupling for which the density-gauge
    curvature chain reproduces ``(1/2 gamma) lap sqrt(rho) / sqrt(rho)``."""
    if n < 3:
        raise ValueError("the density gauge needs n >= 3")
    return (n - 2) / (8 * (n - 1))


# ---------------------------------------------------------------------------
# manifold

@dataclass(frozen=True, eq=False)
class WeylManifold:
    """Metric ``g_ik`` and gauge ``phi_k`` sampled on a grid.

    ``metric`` is ``(n, n)`` (constant) or ``(n, n) + grid.shape``; ``gauge``
    is ``None`` (zero), ``(n,)`` or ``(n,) + grid.shape``.
    """

    grid: Grid
    metric: np.ndarray
    gauge: np.ndarray | None = None
    accuracy: int = 4

    def __post_init__(self):
        n = self.grid.ndim
        if not 2 <= n <= 3:
            raise ValueError("sampled Weyl manifolds have 2 or 3 dimensions")
        g = np.asarray(self.metric, dtype=float)
        self_const = g.shape == (n, n)
        if self_const:
            g = np.broadcast_to(g.reshape((n, n) + (1,) * n), (n, n) + self.grid.shape)
        if g.shape != (n, n) + self.grid.shape:
            raise ValueError(f"metric must have shape {(n, n)} or {(n, n) + self.grid.shape}")
        if not np.all(np.isfinite(g)):
            raise ValueError("metric has non-finite values")
        if np.abs(g - np.swapaxes(g, 0, 1)).max() > 1e-12 * max(1.0, np.abs(g).max()):
            raise ValueError("metric is not symmetric")
        g = 0.5 * (g + np.swapaxes(g, 0, 1))
        eig = np.linalg.eigvalsh(np.moveaxis(g, (0, 1), (-2, -1)))
        if not eig.min() > 0:
            raise ValueError("metric is not positive definite at every node")
        phi = np.zeros((n,) + self.grid.shape) if self.gauge is None else np.asarray(self.gauge, float)
        if phi.shape == (n,):
            phi = np.broadcast_to(phi.reshape((n,) + (1,) * n), (n,) + self.grid.shape)
        if phi.shape != (n,) + self.grid.shape:
            raise ValueError(f"gauge must have shape {(n,)} or {(n,) + self.grid.shape}")
        if not np.all(np.isfinite(phi)):
            raise ValueError("gauge has non-finite values")
        object.__setattr__(self, "metric", np.array(g))
        object.__setattr__(self, "gauge", np.array(phi))
        object.__setattr__(self, "_constant", bool(self_const))

    @property
    def n(self) -> int:
        return self.grid.ndim

    @property
    def constant_metric(self) -> bool:
        return self._constant

    def inverse_metric(self) -> np.ndarray:
        gm = np.moveaxis(self.metric, (0, 1), (-2, -1))
        return np.moveaxis(np.linalg.inv(gm), (-2, -1), (0, 1))

    def sqrt_det(self) -> np.ndarray:
        return np.sqrt(np.linalg.det(np.moveaxis(self.metric, (0, 1), (-2, -1))))

    def with_gauge(self, gauge) -> "WeylManifold":
        return WeylManifold(self.grid, self.metric, gauge, self.accuracy)

    def d(self, f: np.ndarray, axis: int) -> np.ndarray:
        """4th-order (by default) derivative of a component-first field."""
        lead = f.ndim - self.n
        return derivative(f, lead + axis, self.grid.spacing[axis],
                          periodic=self.grid.periodic, accuracy=self.accuracy)

    def interior(self) -> np.ndarray:
        """Nodes whose nested stencils never touch a one-sided closure."""
        return ~self.grid.boundary_mask(self.accuracy)


def flat_manifold(grid: Grid, gauge=None, metric=None, accuracy: int = 4) -> WeylManifold:
    n = grid.ndim
    g = np.eye(n) if metric is None else np.asarray(metric, float)
    return WeylManifold(grid, g, gauge, accuracy)


# ---------------------------------------------------------------------------
# connection and derivatives

def christoffel(M: WeylManifold) -> np.ndarray:
    """Levi-Civita ``{i, kl} = (1/2) g^im (d_k g_ml + d_l g_mk - d_m g_kl)``."""
    n = M.n
    if M.constant_metric:
        return np.zeros((n, n, n) + M.grid.shape)
    dg = np.stack([M.d(M.metric, a) for a in range(n)])  # dg[c, a, b] = d_c g_ab
    # first[m, k, l] = (1/2)(d_k g_ml + d_l g_mk - d_m g_kl)
    first = 0.5 * (np.einsum("kml...->mkl...", dg) + np.einsum("lmk...->mkl...", dg) - dg)
    return np.einsum("im...,mkl...->ikl...", M.inverse_metric(), first)


def weyl_connection(M: WeylManifold) -> np.ndarray:
    """``Gamma^i_kl``, symmetric in ``k, l``."""
    n = M.n
    phi = M.gauge
    phi_up = np.einsum("im...,m...->i...", M.inverse_metric(), phi)
    eye = np.eye(n).reshape((n, n) + (1,) * n)
    gauge = (np.einsum("ik...,l...->ikl...", eye * np.ones(M.grid.shape), phi)
             + np.einsum("il...,k...->ikl...", eye * np.ones(M.grid.shape), phi)
             - np.einsum("kl...,i...->ikl...", M.metric, phi_up))
    return -christoffel(M) + gauge


def covariant_derivative(A: np.ndarray, Gamma: np.ndarray, M: WeylManifold,
                         variance: str = "contravariant") -> np.ndarray:
    """``out[k, i] = A^k_{,i}`` (or ``A_{k,i}``); a scalar field gives its
    plain gradient ``out[i]``."""
    n = M.n
    A = np.asarray(A, dtype=float)
    if A.ndim == n:
        return np.stack([M.d(A, i) for i in range(n)])
    dA = np.stack([M.d(A, i) for i in range(n)], axis=1)  # dA[k, i] = d_i A_k
    if variance == "contravariant":
        return dA - np.einsum("kil...,l...->ki...", Gamma, A)
    if variance == "covariant":
        return dA + np.einsum("lik...,l...->ki...", Gamma, A)
    raise ValueError("variance must be 'contravariant' or 'covariant'")


def covariant_derivative_mixed(T: np.ndarray, Gamma: np.ndarray, M: WeylManifold) -> np.ndarray:
    """``T^i_{k,l} = d_l T^i_k - Gamma^i_lm T^m_k + Gamma^m_lk T^i_m``."""
    n = M.n
    dT = np.stack([M.d(T, l) for l in range(n)], axis=2)
    return (dT - np.einsum("ilm...,mk...->ikl...", Gamma, T)
            + np.einsum("mlk...,im...->ikl...", Gamma, T))


def nonmetricity(M: WeylManifold, Gamma: np.ndarray | None = None) -> np.ndarray:
    """``g_{ik,l}``; equals ``2 g_ik phi_l`` for this connection."""
    G = weyl_connection(M) if Gamma is None else Gamma
    n = M.n
    dg = np.stack([M.d(M.metric, l) for l in range(n)], axis=2)
    return (dg + np.einsum("mli...,mk...->ikl...", G, M.metric)
            + np.einsum("mlk...,im...->ikl...", G, M.metric))


def transport_step(M: WeylManifold, node, A, dq, Gamma: np.ndarray | None = None):
    """One explicit parallel-transport step of the vector ``A`` from ``node``
    along ``dq``.

    Returns ``(new_components, length_change, predicted)`` where the new
    length uses the metric linearly extrapolated to ``q + dq`` and
    ``predicted = l phi_k dq^k``; the two agree to ``O(dq^2)``.
    """
    G = weyl_connection(M) if Gamma is None else Gamma
    node = tuple(node)
    A = np.asarray(A, float)
    dq = np.asarray(dq, float)
    new = A + np.einsum("ikl,k,l->i", G[(slice(None),) * 3 + node], dq, A)
    g = M.metric[(slice(None),) * 2 + node]
    dg = sum(M.d(M.metric, l)[(slice(None),) * 2 + node] * dq[l] for l in range(M.n))
    phi = M.gauge[(slice(None),) + node]
    length = np.sqrt(A @ g @ A)
    return new, np.sqrt(new @ (g + dg) @ new) - length, length * (phi @ dq)


# ---------------------------------------------------------------------------
# curvature

@dataclass
class CurvatureBundle:
    riemann: np.ndarray            # [i, m, k, l]
    ricci: np.ndarray              # [i, k]
    scalar: np.ndarray
    riemannian_scalar: np.ndarray  # same chain with phi = 0
    interior: np.ndarray           # True where assertions are meaningful
    excluded: int


def _riemann(Gamma: np.ndarray, M: WeylManifold) -> np.ndarray:
    n = M.n
    dG = np.stack([M.d(Gamma, l) for l in range(n)])  # dG[l, i, m, k] = d_l Gamma^i_mk
    return (-np.einsum("limk...->imkl...", dG) + np.einsum("kiml...->imkl...", dG)
            + np.einsum("inl...,nmk...->imkl...", Gamma, Gamma)
            - np.einsum("ink...,nml...->imkl...", Gamma, Gamma))


def _scalar_from(Gamma: np.ndarray, M: WeylManifold, ginv: np.ndarray):
    riem = _riemann(Gamma, M)
    ricci = np.einsum("lilk...->ik...", riem)
    return riem, ricci, np.einsum("ik...,ik...->...", ginv, ricci)


def curvature(M: WeylManifold) -> CurvatureBundle:
    ginv = M.inverse_metric()
    riem, ricci, R = _scalar_from(weyl_connection(M), M, ginv)
    if np.any(M.gauge):
        _, _, Rdot = _scalar_from(weyl_connection(M.with_gauge(None)), M, ginv)
    else:
        Rdot = R.copy()
    inner = M.interior()
    return CurvatureBundle(riem, ricci, R, Rdot, inner, int(np.count_nonzero(~inner)))


def riemannian_scalar_standard(M: WeylManifold) -> np.ndarray:
    """Textbook scalar curvature from ``+{}``,
    ``R^i_mkl = d_k {i,lm} - d_l {i,km} + {i,kn}{n,lm} - {i,ln}{n,km}``,
    ``R_ml = R^k_mkl``; a sphere of radius ``a`` gives ``+2/a^2``."""
    n = M.n
    C = christoffel(M)
    dC = np.stack([M.d(C, a) for a in range(n)])  # dC[a, i, k, l] = d_a {i, kl}
    riem = (np.einsum("kilm...->imkl...", dC) - np.einsum("likm...->imkl...", dC)
            + np.einsum("ikn...,nlm...->imkl...", C, C) - np.einsum("iln...,nkm...->imkl...", C, C))
    ricci = np.einsum("kmkl...->ml...", riem)
    return np.einsum("ml...,ml...->...", M.inverse_metric(), ricci)


def bianchi_residual(bundle: CurvatureBundle) -> np.ndarray:
    """First Bianchi cyclic sum ``R^i_mkl + R^i_klm + R^i_lmk`` (max over
    components), which vanishes for a torsion-free connection."""
    r = bundle.riemann
    cyc = r + np.einsum("iklm...->imkl...", r) + np.einsum("ilmk...->imkl...", r)
    return np.abs(cyc).max(axis=(0, 1, 2, 3))


def antisymmetry_residual(bundle: CurvatureBundle) -> np.ndarray:
    r = bundle.riemann
    return np.abs(r + np.swapaxes(r, 2, 3)).max(axis=(0, 1, 2, 3))


def commutator_residual(M: WeylManifold, A: np.ndarray, bundle: CurvatureBundle | None = None):
    """``A^i_{,k,l} - A^i_{,l,k} - R^i_mkl A^m`` (max over components)."""
    G = weyl_connection(M)
    b = curvature(M) if bundle is None else bundle
    T = covariant_derivative(A, G, M, "contravariant")
    TT = covariant_derivative_mixed(T, G, M)
    lhs = TT - np.swapaxes(TT, 1, 2)
    rhs = np.einsum("imkl...,m...->ikl...", b.riemann, A)
    return np.abs(lhs - rhs).max(axis=(0, 1, 2))


def divergence(M: WeylManifold, vec_up: np.ndarray) -> np.ndarray:
    """``(1/sqrt g) d_i (sqrt g v^i)``."""
    sg = M.sqrt_det()
    return sum(M.d(sg * vec_up[i], i) for i in range(M.n)) / sg


@dataclass
class DecompositionReport:
    R: np.ndarray
    Rdot: np.ndarray
    rhs: np.ndarray
    residual: np.ndarray
    max_residual: float


def scalar_decomposition_check(M: WeylManifold, bundle: CurvatureBundle | None = None
                               ) -> DecompositionReport:
    """``R - [Rdot + (n-1)((n-2) phi_i phi^i - 2 div phi)]`` on interior nodes."""
    b = curvature(M) if bundle is None else bundle
    n = M.n
    phi_up = np.einsum("im...,m...->i...", M.inverse_metric(), M.gauge)
    sq = np.einsum("i...,i...->...", M.gauge, phi_up)
    rhs = b.riemannian_scalar + (n - 1) * ((n - 2) * sq - 2 * divergence(M, phi_up))
    res = b.scalar - rhs
    return DecompositionReport(b.scalar, b.riemannian_scalar, rhs, res,
                               float(np.abs(res[b.interior]).max()))


# ---------------------------------------------------------------------------
# density coupling

def _positive(rho) -> tuple[np.ndarray, Grid]:
    if not isinstance(rho, DensityGrid):
        raise TypeError("expected a DensityGrid")
    if not rho.values.min() > 0:
        raise ValueError("density must be strictly positive; apply DensityGrid.floored first")
    return rho.values, rho.grid


def gauge_from_density(rho_hat: DensityGrid, n: int | None = None, accuracy: int = 4) -> np.ndarray:
    """``phi_i = -(1/(n-2)) d_i log rho_hat``; shape ``(ndim,) + grid.shape``."""
    v, grid = _positive(rho_hat)
    n = grid.ndim if n is None else n
    if n == 2:
        raise ValueError("the density gauge divides by n - 2 and is undefined for n = 2")
    if n < 2:
        raise ValueError("dimension must be at least 3")
    L = np.log(v)
    return np.stack([-derivative(L, a, grid.spacing[a], periodic=grid.periodic,
                                 accuracy=accuracy) / (n - 2) for a in range(grid.ndim)])


def weyl_scalar_from_density(rho_hat: DensityGrid, gamma: float, metric=None,
                             accuracy: int = 4) -> np.ndarray:
    """``R = (1/(2 gamma sqrt rho)) d_i (g^ik d_k sqrt rho)`` on a flat
    background, as a divergence of a gradient.  NaN on masked nodes."""
    if isinstance(metric, WeylManifold):
        if not metric.constant_metric:
            raise ValueError("the density fast path needs a constant metric")
        metric = metric.metric[(slice(None),) * 2 + (0,) * metric.n]
    v, grid = rho_hat.values, rho_hat.grid
    n = grid.ndim
    g = np.eye(n) if metric is None else np.asarray(metric, float)
    if g.shape != (n, n):
        raise ValueError("the density fast path needs a constant metric")
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    gi = np.linalg.inv(g)
    r = np.sqrt(v)
    d1 = [derivative(r, a, grid.spacing[a], periodic=grid.periodic, accuracy=accuracy)
          for a in range(n)]
    flux = [sum(gi[i, k] * d1[k] for k in range(n)) for i in range(n)]
    div = sum(derivative(flux[i], i, grid.spacing[i], periodic=grid.periodic, accuracy=accuracy)
              for i in range(n))
    mask = amplitude_mask(r)
    out = np.full(v.shape, np.nan)
    out[~mask] = div[~mask] / (2 * gamma * r[~mask])
    return out


def chain_scalar_from_density(rho_hat: DensityGrid, n: int | None = None,
                              accuracy: int = 4) -> tuple[np.ndarray, np.ndarray]:
    """Weyl scalar from the full tensor chain on the flat background with
    the density gauge; returns ``(R, interior)``."""
    grid = rho_hat.grid
    phi = gauge_from_density(rho_hat, n, accuracy)
    M = flat_manifold(grid, phi, accuracy=accuracy)
    b = curvature(M)
    return b.scalar, b.interior


def support_mask(rho, level: float) -> np.ndarray:
    """True where ``sqrt(rho) >= level * max sqrt(rho)``."""
    v = rho.values
    r = np.sqrt(v)
    return r >= level * r.max()


@dataclass
class QCurvatureReport:
    lhs: np.ndarray
    rhs: np.ndarray
    gamma: float
    max_relative_gap: float
    kept: int
    chain_ratio: float | None = None  # median R_chain / R_fast on kept nodes


def q_curvature_identity(rho_hat: DensityGrid, hbar: float | None = None, mass: float = 1.0,
                         n: int = 3, gamma: float | None = None, accuracy: int = 4,
                         support: float = 1e-3, with_chain: bool = False) -> QCurvatureReport:
    """``Q(rho)`` against ``-gamma (hbar^2/m) R`` with ``R`` from the density
    fast path.

    The relative gap is ``|lhs - rhs| / max|lhs|`` over nodes where
    ``sqrt(rho) >= support * max sqrt(rho)`` and away from decay edges.
    """
    hbar = config.resolve(hbar)
    gamma = gamma_weyl(n) if gamma is None else gamma
    lhs = quantum_potential(rho_hat, hbar, mass, accuracy)
    R = weyl_scalar_from_density(rho_hat, gamma, accuracy=accuracy)
    rhs = -gamma * hbar**2 / mass * R
    keep = support_mask(rho_hat, support) & ~rho_hat.grid.boundary_mask(accuracy)
    keep &= np.isfinite(lhs) & np.isfinite(rhs)
    scale = np.abs(lhs[keep]).max() if keep.any() else 0.0
    if scale == 0:
        gap = float(np.abs(rhs[keep]).max()) if keep.any() else 0.0
    else:
        gap = float(np.abs(lhs - rhs)[keep].max() / scale)
    ratio = None
    if with_chain:
        Rc, inner = chain_scalar_from_density(rho_hat, n if n == rho_hat.ndim else None, accuracy)
        k2 = keep & inner & (np.abs(R) > 1e-6 * np.nanmax(np.abs(R[keep])))
        ratio = float(np.median(Rc[k2] / R[k2])) if k2.any() else None
    return QCurvatureReport(lhs, rhs, gamma, gap, int(np.count_nonzero(keep)), ratio)


def hj_weyl_residual(m, V, dS_dt, drho_dt, mass: float = 1.0, gamma: float | None = None,
                     A=None, metric=None, accuracy: int = 4):
    """HJ residual ``dS/dt + (1/2m) g^ik (d_i S - A_i)(d_k S - A_k) + V - gamma (hbar^2/m) R``
    and continuity residual ``d rho/dt + (1/m) d_i(rho g^ik (d_k S - A_k))``
    on a flat background.  Both are NaN on masked nodes."""
    if dS_dt is None or drho_dt is None:
        raise ValueError("hj_weyl_residual needs time derivatives of S and rho")
    grid = m.grid
    n = grid.ndim
    gamma = gamma_weyl(n) if gamma is None else gamma
    g = np.eye(n) if metric is None else np.asarray(metric, float)
    gi = np.linalg.inv(g)
    hbar = m.hbar
    e = m.phase_factor()
    gS = [hbar * (np.conj(e) * derivative(e, a, grid.spacing[a], periodic=grid.periodic,
                                          accuracy=accuracy)).imag for a in range(n)]
    if A is not None:
        A = np.broadcast_to(np.asarray(A, float).reshape((n,) + (1,) * n)
                            if np.ndim(A) == 1 else np.asarray(A, float), (n,) + grid.shape)
        gS = [gS[a] - A[a] for a in range(n)]
    kin = sum(gi[i, k] * gS[i] * gS[k] for i in range(n) for k in range(n)) / (2 * mass)
    R = weyl_scalar_from_density(m.rho, gamma, g, accuracy)
    V = np.zeros(grid.shape) if V is None else np.asarray(V, float)
    hj = np.asarray(dS_dt) + kin + V - gamma * hbar**2 / mass * R
    v = m.rho.values
    flux = [sum(gi[i, k] * gS[k] for k in range(n)) * v / mass for i in range(n)]
    ct = np.asarray(drho_dt) + sum(derivative(flux[i], i, grid.spacing[i], periodic=grid.periodic,
                                              accuracy=accuracy) for i in range(n))
    hj[m.mask] = np.nan
    ct[m.mask] = np.nan
    return hj, ct


def fisher_curvature_report(rho_hat: DensityGrid, hbar: float | None = None, mass: float = 1.0,
                            n: int | None = None, gamma: float | None = None,
                            accuracy: int = 4, with_chain: bool = True) -> dict:
    """Three independent integrals and the constants relating them.

    ``int rho Q``, ``I = int |grad rho|^2 / rho`` and ``int rho R`` (fast
    path).  ``fitted_constant = I / int rho R`` is compared with the value
    ``8 gamma`` obtained by chaining ``int rho Q = -(hbar^2/8m) I`` with
    ``Q = -gamma (hbar^2/m) R``, and with the sign-corrected chain
    ``int rho Q = +(hbar^2/8m) I``, which gives ``-8 gamma``.  The constant
    ``hbar^4 / (96 m^2)`` is evaluated as well.
    """
    hbar = config.resolve(hbar)
    grid = rho_hat.grid
    n = grid.ndim if n is None else n
    gamma = gamma_weyl(n) if gamma is None else gamma
    v = rho_hat.values
    Q = quantum_potential(rho_hat, hbar, mass, accuracy)
    int_Q = masked_integral(grid, v * Q)
    I = fisher_trace(rho_hat, accuracy)
    R = weyl_scalar_from_density(rho_hat, gamma, accuracy=accuracy)
    int_R = masked_integral(grid, v * R)
    fitted = I / int_R if int_R != 0 else float("nan")
    implied = 8 * gamma
    corrected = -8 * gamma
    printed = hbar**4 / (96 * mass**2)
    rep = {
        "int_rho_Q": int_Q,
        "minus_hbar2_over_8m_I": -hbar**2 / (8 * mass) * I,
        "plus_hbar2_over_8m_I": hbar**2 / (8 * mass) * I,
        "fisher_unhalved": I,
        "int_rho_R": int_R,
        "gamma": gamma,
        "fitted_constant": fitted,
        "implied_constant": implied,
        "relative_gap_implied": abs(fitted - implied) / abs(implied),
        "corrected_constant": corrected,
        "relative_gap_corrected": abs(fitted - corrected) / abs(corrected),
        "printed_constant": printed,
        "printed_over_fitted": printed / fitted if fitted else float("nan"),
        "q_identity_relative_gap": abs(int_Q - hbar**2 / (8 * mass) * I) / abs(hbar**2 / (8 * mass) * I)
        if I else 0.0,
    }
    if with_chain and grid.ndim >= 3 and n == grid.ndim:
        Rc, inner = chain_scalar_from_density(rho_hat, n, accuracy)
        w = np.where(inner & ~density_mask(rho_hat), v * np.nan_to_num(Rc), 0.0)
        int_Rc = float(grid.integrate(w))
        rep["int_rho_R_chain"] = int_Rc
        rep["fitted_constant_chain"] = I / int_Rc if int_Rc else float("nan")
        rep["chain_constant_expected"] = -8 * gamma_chain(n)
    return rep


# ---------------------------------------------------------------------------
# manifold specification files

def load_manifold(path, accuracy: int = 4) -> WeylManifold:
    """Read a JSON manifold spec.

    Keys: ``shape``, ``spacing``, ``origin`` (optional), ``boundary``
    (optional), ``metric`` ``{"mode": "constant", "matrix": [[...]]}`` or
    ``{"mode": "sampled", "csv": FILE}`` (upper-triangular components per
    row), and ``gauge`` ``{"mode": "zero"}``, ``{"mode": "sampled", "csv":
    FILE}`` or ``{"mode": "from_density", "csv": FILE}``.
    """
    path = Path(path)
    spec = json.loads(path.read_text())
    shape = spec["shape"]
    n = len(shape)
    if "dims" in spec and spec["dims"] != n:
        raise ValueError("dims does not match shape")
    grid = Grid(tuple(shape), tuple(spec["spacing"]), tuple(spec.get("origin", [0.0] * n)),
                spec.get("boundary", "decay"))
    mspec = spec.get("metric", {"mode": "constant", "matrix": np.eye(n).tolist()})
    if mspec["mode"] == "constant":
        metric = np.asarray(mspec["matrix"], float)
    elif mspec["mode"] == "sampled":
        cols = read_grid_csv(path.parent / mspec["csv"], grid)
        iu = np.triu_indices(n)
        if len(cols) != len(iu[0]):
            raise ValueError(f"sampled metric needs {len(iu[0])} component columns")
        metric = np.empty((n, n) + grid.shape)
        for c, (i, k) in zip(cols, zip(*iu)):
            metric[i, k] = metric[k, i] = c
    else:
        raise ValueError(f"unknown metric mode {mspec['mode']!r}")
    gspec = spec.get("gauge", {"mode": "zero"})
    if gspec["mode"] == "zero":
        gauge = None
    elif gspec["mode"] == "sampled":
        cols = read_grid_csv(path.parent / gspec["csv"], grid)
        if len(cols) != n:
            raise ValueError(f"sampled gauge needs {n} component columns")
        gauge = np.stack(cols)
    elif gspec["mode"] == "from_density":
        rho = DensityGrid(read_grid_csv(path.parent / gspec["csv"], grid)[0], grid)
        gauge = gauge_from_density(rho, n, accuracy)
    else:
        raise ValueError(f"unknown gauge mode {gspec['mode']!r}")
    return WeylManifold(grid, metric, gauge, accuracy)

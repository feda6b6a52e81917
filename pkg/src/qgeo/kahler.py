"""Kähler structure of projective space in chart coordinates.

Tangent vectors carry holomorphic components ``v`` over a chart point ``z``.
With ``s = 1 + |z|^2`` the Hermitian bracket

    B(v, w) = (v|w)/s - (v|z)(z|w)/s^2

gives the Fubini-Study metric ``g = 2 nu Re B`` and the fundamental form
``omega = 2 nu Im B``; the complex structure multiplies components by ``i``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import config
from .hilbert import ChartPoint, StateVector, as_array, from_chart, to_chart

# step for the finite-difference checks of the Kähler potential
POTENTIAL_STEP = 1e-4


@dataclass(frozen=True, eq=False)
class TangentVector:
    base: ChartPoint
    components: np.ndarray

    def __post_init__(self):
        c = np.array(self.components, dtype=complex)
        if c.shape != self.base.coords.shape:
            raise ValueError("tangent components must match the chart dimension")
        if not np.all(np.isfinite(c)):
            raise ValueError("tangent components must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "components", c)

    def __neg__(self):
        return TangentVector(self.base, -self.components)

    def __add__(self, other: "TangentVector"):
        _same_base(self.base, other.base)
        return TangentVector(self.base, self.components + other.components)

    def __mul__(self, c):
        return TangentVector(self.base, c * self.components)

    __rmul__ = __mul__

    def realified(self) -> np.ndarray:
        """Real components ``(x, y)`` with ``v = (x + i y) / sqrt(2)``."""
        return np.sqrt(2.0) * np.concatenate([self.components.real, self.components.imag])


@dataclass(frozen=True)
class MetricValue:
    g: float
    omega: float


def _same_base(a: ChartPoint, b: ChartPoint) -> None:
    if a is b:
        return
    if a.chart_index != b.chart_index or not np.array_equal(a.coords, b.coords):
        raise ValueError("tangent vectors live at different base points")


def _components(z: ChartPoint, v) -> np.ndarray:
    if isinstance(v, TangentVector):
        _same_base(z, v.base)
        return v.components
    return np.asarray(v, dtype=complex)


def hermitian_bracket(z: ChartPoint, v, w) -> complex:
    zc = z.coords
    vc, wc = _components(z, v), _components(z, w)
    s = 1.0 + np.vdot(zc, zc).real
    return complex(np.vdot(vc, wc) / s - np.vdot(vc, zc) * np.vdot(zc, wc) / s**2)


def fs_metric(z: ChartPoint, v, w, nu: float | None = None) -> float:
    return 2 * config.resolve(nu) * hermitian_bracket(z, v, w).real


def symplectic_form(z: ChartPoint, v, w, nu: float | None = None) -> float:
    return 2 * config.resolve(nu) * hermitian_bracket(z, v, w).imag


def metric_value(z: ChartPoint, v, w, nu: float | None = None) -> MetricValue:
    b = 2 * config.resolve(nu) * hermitian_bracket(z, v, w)
    return MetricValue(b.real, b.imag)


def apply_J(v: TangentVector) -> TangentVector:
    return TangentVector(v.base, 1j * v.components)


def metric_components(z: ChartPoint) -> np.ndarray:
    """Component matrix ``g_mn = delta_mn / s - conj(z_m) z_n / s^2``."""
    zc = z.coords
    s = 1.0 + np.vdot(zc, zc).real
    return np.eye(zc.size) / s - np.outer(zc.conj(), zc) / s**2


def contract_components(gmn: np.ndarray, v, w) -> complex:
    """``sum_mn g_mn w_m conj(v_n)``; equals the bracket ``B(v, w)``."""
    v = v.components if isinstance(v, TangentVector) else np.asarray(v)
    w = w.components if isinstance(w, TangentVector) else np.asarray(w)
    return complex(w @ gmn @ v.conj())


def homogeneous_form(Z, V, W) -> complex:
    """``(V|W)/|Z|^2 - (V|Z)(Z|W)/|Z|^4``, the Hessian of ``log |Z|^2`` on
    ``C^N`` contracted with two vectors."""
    Z, V, W = (np.asarray(a, dtype=complex) for a in (Z, V, W))
    n2 = np.vdot(Z, Z).real
    return complex(np.vdot(V, W) / n2 - np.vdot(V, Z) * np.vdot(Z, W) / n2**2)


def kahler_potential(z: ChartPoint | np.ndarray) -> float:
    """``log(1 + |z|^2)``."""
    zc = z.coords if isinstance(z, ChartPoint) else np.asarray(z)
    return float(np.log1p(np.vdot(zc, zc).real))


def _potential_batch(zs: np.ndarray) -> np.ndarray:
    return np.log1p(np.einsum("ij,ij->i", zs.conj(), zs).real)


def potential_hessian(z: ChartPoint, h: float = POTENTIAL_STEP,
                      potential: Callable[[np.ndarray], np.ndarray] = _potential_batch) -> np.ndarray:
    """Complex Hessian ``d^2 f / dz_m dzbar_n`` by central differences.

    ``potential`` maps a batch of coordinate rows to values.  All stencil
    points are evaluated in one call.
    """
    zc = z.coords
    n = zc.size
    dirs = np.concatenate([np.eye(n), 1j * np.eye(n)]).astype(complex)
    m = 2 * n
    signs = np.array([[1, 1], [1, -1], [-1, 1], [-1, -1]], dtype=float)
    pts = (zc[None, None, None, :]
           + h * signs[None, None, :, 0, None] * dirs[:, None, None, :]
           + h * signs[None, None, :, 1, None] * dirs[None, :, None, :])
    vals = potential(pts.reshape(-1, n)).reshape(m, m, 4)
    real_hess = (vals[..., 0] - vals[..., 1] - vals[..., 2] + vals[..., 3]) / (4 * h * h)
    aa, ab = real_hess[:n, :n], real_hess[:n, n:]
    ba, bb = real_hess[n:, :n], real_hess[n:, n:]
    return 0.25 * ((aa + bb) + 1j * (ab - ba))


def potential_check(z: ChartPoint, h: float = POTENTIAL_STEP) -> float:
    """Largest deviation between the finite-difference ``i d dbar f`` and the
    metric components.  With ``f = log(1 + |z|^2)`` the two agree with unit
    constant; ``g`` and ``omega`` then carry the factor ``2 nu``."""
    return float(np.abs(potential_hessian(z, h) - metric_components(z)).max())


def potential_pairing(z: ChartPoint, v, w, h: float = POTENTIAL_STEP,
                      nu: float | None = None) -> MetricValue:
    """``g(v, w)`` and ``omega(v, w)`` rebuilt from directional second
    derivatives of the Kähler potential alone:

        g     = nu/2 [D2f(w, v) + D2f(iw, iv)]
        omega = nu/2 [D2f(w, iv) - D2f(iw, v)]
    """
    nu = config.resolve(nu)
    zc = z.coords
    vc, wc = _components(z, v), _components(z, w)

    def d2(a, b):
        pts = np.stack([zc + h * a + h * b, zc + h * a - h * b,
                        zc - h * a + h * b, zc - h * a - h * b])
        f = _potential_batch(pts)
        return (f[0] - f[1] - f[2] + f[3]) / (4 * h * h)

    g = 0.5 * nu * (d2(wc, vc) + d2(1j * wc, 1j * vc))
    om = 0.5 * nu * (d2(wc, 1j * vc) - d2(1j * wc, vc))
    return MetricValue(g, om)


def _unit(r) -> np.ndarray:
    if isinstance(r, ChartPoint):
        return from_chart(r).amplitudes
    x = as_array(r)
    return x / np.linalg.norm(x)


def geodesic_distance(r1, r2) -> float:
    """Fubini-Study angle ``arccos |<r1|r2>|`` in ``[0, pi/2]``.

    Evaluated as ``atan2(|r2_perp|, |<r1|r2>|)``, which equals the arccos
    form but stays accurate for nearly coincident rays.
    """
    a, b = _unit(r1), _unit(r2)
    if a.shape != b.shape:
        raise ValueError("dimension mismatch")
    c = np.vdot(a, b)
    perp = np.linalg.norm(b - a * c)
    return float(np.arctan2(perp, min(abs(c), 1.0)))


def fs_decomposition(p, dp, dphi) -> tuple[float, float]:
    """Split the pure-state line element into its Fisher part
    ``sum dp^2 / (4 p)`` and the phase variance
    ``sum p dphi^2 - (sum p dphi)^2``."""
    p, dp, dphi = (np.asarray(a, dtype=float) for a in (p, dp, dphi))
    if np.any(p <= 0):
        raise ValueError("probabilities must be positive")
    fisher = 0.25 * float(np.sum(dp**2 / p))
    mean = float(np.sum(p * dphi) / np.sum(p))
    # centred form is nonnegative term by term
    var = float(np.sum(p * (dphi - mean) ** 2))
    return fisher, var


def fs_overlap_defect(p, dp, dphi, phi=None) -> float:
    """Direct ``1 - |<psi~|psi>|^2`` for ``psi = sum sqrt(p) e^{i phi}|j>``."""
    p, dp, dphi = (np.asarray(a, dtype=float) for a in (p, dp, dphi))
    phi = np.zeros_like(p) if phi is None else np.asarray(phi, dtype=float)
    psi = np.sqrt(p) * np.exp(1j * phi)
    psit = np.sqrt(p + dp) * np.exp(1j * (phi + dphi))
    # |psit|^2 = |<psi|psit>|^2 + |perp|^2 avoids cancellation in 1 - |c|^2
    perp = psit - psi * np.vdot(psi, psit)
    return float(1.0 - np.vdot(psit, psit).real + np.vdot(perp, perp).real)


# ---------------------------------------------------------------------------
# tangent vectors in the ambient space

def tangent_to_ambient(v: TangentVector) -> tuple[np.ndarray, np.ndarray]:
    """Representative ``x = z + e_k`` and the matching ambient tangent."""
    return v.base.lift(), np.insert(v.components, v.base.chart_index - 1, 0.0)


def ambient_to_tangent(x, eta, k: int | str = "auto") -> TangentVector:
    """Chart-``k`` image of the ambient tangent ``eta`` at ``x``."""
    x, eta = as_array(x), np.asarray(eta, dtype=complex)
    base = to_chart(x, k)
    kk = base.chart_index - 1
    d = eta / x[kk] - x * eta[kk] / x[kk] ** 2
    return TangentVector(base, np.delete(d, kk))


def ambient_bracket(x, eta, xi) -> complex:
    """The bracket ``B`` written on ``H`` at an unnormalized ``x``."""
    x = as_array(x)
    n2 = np.vdot(x, x).real
    return complex(np.vdot(eta, xi) / n2 - np.vdot(eta, x) * np.vdot(x, xi) / n2**2)


def pushforward(U: np.ndarray, v: TangentVector, k: int | str = "auto") -> TangentVector:
    """Image of ``v`` under the ray map ``[x] -> [U x]``."""
    x, eta = tangent_to_ambient(v)
    return ambient_to_tangent(U @ x, U @ eta, k)


def random_tangent(base: ChartPoint, rng) -> TangentVector:
    n = base.coords.size
    return TangentVector(base, rng.standard_normal(n) + 1j * rng.standard_normal(n))


# ---------------------------------------------------------------------------
# integrability

VectorField = Callable[[np.ndarray], np.ndarray]


def _as_field(v) -> VectorField:
    if isinstance(v, TangentVector):
        comps = v.components
        return lambda c: comps
    if callable(v):
        return v
    comps = np.asarray(v, dtype=complex)
    return lambda c: comps


def _lie_bracket(X: VectorField, Y: VectorField, c: np.ndarray, h: float) -> np.ndarray:
    """``[X, Y] = DY.X - DX.Y`` with directional central differences."""
    def ddir(F, at, d):
        return (F(at + h * d) - F(at - h * d)) / (2 * h)
    return ddir(Y, c, X(c)) - ddir(X, c, Y(c))


def nijenhuis_residual(z: ChartPoint, v, w, h: float = 1e-5) -> float:
    """Max-norm of ``N(X, Y) = [JX, JY] - [X, Y] - J[X, JY] - J[JX, Y]``.

    ``v`` and ``w`` are tangent vectors (extended with constant
    coefficients) or callables mapping chart coordinates to components.
    """
    X, Y = _as_field(v), _as_field(w)

    def JX(c):
        return 1j * X(c)

    def JY(c):
        return 1j * Y(c)

    c = z.coords
    n = (_lie_bracket(JX, JY, c, h) - _lie_bracket(X, Y, c, h)
         - 1j * _lie_bracket(X, JY, c, h) - 1j * _lie_bracket(JX, Y, c, h))
    return float(np.abs(n).max())


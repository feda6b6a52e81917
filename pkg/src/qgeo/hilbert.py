"""Finite-dimensional Hilbert space: states, rays and the chart atlas of the
projective space.

Chart ``k`` (1-based) covers the rays whose ``k``-th amplitude is nonzero and
sends ``psi`` to the ratios ``psi_n / psi_k`` with the ``k``-th entry
dropped.  The same chart viewed inside ``H`` is the vector chart centred on
the basis vector ``e_k``: ``x -> x / (e_k|x) - e_k``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

NORM_TOL = 1e-12
# amplitudes below this are treated as exactly zero when picking a chart
CHART_FLOOR = 1e-300


class ChartError(ValueError):
    """The ray lies outside the requested chart."""


def _frozen(a, dtype=complex) -> np.ndarray:
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class StateVector:
    amplitudes: np.ndarray

    def __post_init__(self):
        a = _frozen(self.amplitudes)
        if a.ndim != 1 or a.size < 2:
            raise ValueError("a state needs a 1-D amplitude array of length >= 2")
        if not np.all(np.isfinite(a)):
            raise ValueError("state amplitudes must be finite")
        object.__setattr__(self, "amplitudes", a)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def is_normalized(self, tol: float = NORM_TOL) -> bool:
        return abs(np.vdot(self.amplitudes, self.amplitudes).real - 1.0) <= tol

    def normalized(self) -> "StateVector":
        n = self.norm()
        if n == 0:
            raise ValueError("cannot normalize the zero vector")
        return StateVector(self.amplitudes / n)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.amplitudes, dtype=dtype)


@dataclass(frozen=True, eq=False)
class ChartPoint:
    chart_index: int
    coords: np.ndarray

    def __post_init__(self):
        c = _frozen(self.coords)
        if c.ndim != 1 or c.size < 1:
            raise ValueError("chart coordinates must be a non-empty 1-D array")
        if not np.all(np.isfinite(c)):
            raise ValueError("chart coordinates must be finite")
        if not 1 <= int(self.chart_index) <= c.size + 1:
            raise ValueError(f"chart index {self.chart_index} outside [1, {c.size + 1}]")
        object.__setattr__(self, "chart_index", int(self.chart_index))
        object.__setattr__(self, "coords", c)

    @property
    def dim(self) -> int:
        """Dimension of the ambient Hilbert space."""
        return self.coords.size + 1

    def embedded(self) -> np.ndarray:
        """Coordinates as a vector of ``[e_k]^perp`` inside ``H``."""
        return np.insert(self.coords, self.chart_index - 1, 0.0)

    def lift(self) -> np.ndarray:
        """The representative ``z + e_k`` (unnormalized, k-th amplitude 1)."""
        return np.insert(self.coords, self.chart_index - 1, 1.0)


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    """Dense Hermitian matrix.  Input is accepted when it is Hermitian up to
    ``1e-10`` relative and then symmetrized exactly."""

    entries: np.ndarray

    def __post_init__(self):
        a = np.array(self.entries, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 2:
            raise ValueError("operator must be a square matrix of size >= 2")
        scale = max(1.0, float(np.abs(a).max()))
        if np.abs(a - a.conj().T).max() > 1e-10 * scale:
            raise ValueError("operator is not Hermitian")
        object.__setattr__(self, "entries", _frozen(0.5 * (a + a.conj().T)))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def __matmul__(self, other):
        if isinstance(other, HermitianOperator):
            return self.entries @ other.entries
        return self.entries @ np.asarray(other)

    def eigh(self):
        return np.linalg.eigh(self.entries)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)


def as_array(x) -> np.ndarray:
    if isinstance(x, StateVector):
        return x.amplitudes
    if isinstance(x, ChartPoint):
        return x.lift()
    return np.asarray(x, dtype=complex)


def inner_product(phi, psi) -> complex:
    """``<phi|psi>``, conjugate-linear in ``phi``."""
    a, b = as_array(phi), as_array(psi)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return complex(np.vdot(a, b))


def metric_parts(phi, psi, nu: float = 1.0) -> tuple[float, float]:
    """Real inner product ``g = 2 nu Re<phi|psi>`` and symplectic form
    ``omega = 2 nu Im<phi|psi>``, so that ``<phi|psi> = (g + i omega) / (2 nu)``."""
    c = inner_product(phi, psi)
    return 2 * nu * c.real, 2 * nu * c.imag


def to_chart(psi, k: int | str = "auto") -> ChartPoint:
    """Coordinates of the ray ``[psi]`` in chart ``k``.

    ``k="auto"`` picks the largest amplitude.
    """
    eta = as_array(psi)
    if k == "auto":
        k = int(np.argmax(np.abs(eta))) + 1
    k = int(k)
    if not 1 <= k <= eta.size:
        raise ValueError(f"chart index {k} outside [1, {eta.size}]")
    pivot = eta[k - 1]
    if abs(pivot) <= CHART_FLOOR:
        raise ChartError(f"ray outside chart {k}")
    return ChartPoint(k, np.delete(eta, k - 1) / pivot)


def from_chart(p: ChartPoint) -> StateVector:
    """Normalized representative with a real positive ``k``-th amplitude."""
    x = p.lift()
    return StateVector(x / np.linalg.norm(x))


def chart_transition(p: ChartPoint, j: int) -> ChartPoint:
    if j == p.chart_index:
        return p
    return to_chart(from_chart(p), j)


def transition_jacobian(p: ChartPoint, j: int, h: float = 1e-6) -> tuple[np.ndarray, float]:
    """Complex Jacobian of the chart change at ``p`` and its Cauchy-Riemann
    residual.

    The derivative along ``i e_m`` is compared with ``i`` times the
    derivative along ``e_m``; a holomorphic map makes them equal.
    """
    n = p.coords.size
    base = p.coords

    def f(c):
        return chart_transition(ChartPoint(p.chart_index, c), j).coords

    jac = np.empty((n, n), dtype=complex)
    resid = 0.0
    for m in range(n):
        e = np.zeros(n, dtype=complex)
        e[m] = h
        d_re = (f(base + e) - f(base - e)) / (2 * h)
        d_im = (f(base + 1j * e) - f(base - 1j * e)) / (2 * h)
        jac[:, m] = d_re
        resid = max(resid, float(np.abs(d_im - 1j * d_re).max()))
    return jac, resid


def to_vector_chart(psi, h) -> np.ndarray:
    """``x / (h|x) - h``, a vector of ``[h]^perp``."""
    x, h = as_array(psi), as_array(h)
    c = np.vdot(h, x)
    if abs(c) <= CHART_FLOOR:
        raise ChartError("ray outside the chart centred on h")
    return x / c - h


def from_vector_chart(z, h) -> StateVector:
    x = as_array(z) + as_array(h)
    return StateVector(x / np.linalg.norm(x))


def basis(dim: int, k: int) -> StateVector:
    """The basis vector ``e_k`` (1-based)."""
    e = np.zeros(dim, dtype=complex)
    e[k - 1] = 1.0
    return StateVector(e)


def random_state(dim: int, seed=None) -> StateVector:
    """Unitarily invariant random pure state (normalized complex Gaussian)."""
    if dim < 2:
        raise ValueError("dimension must be at least 2")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return StateVector(z / np.linalg.norm(z))


def random_hermitian(dim: int, seed=None, scale: float = 1.0) -> HermitianOperator:
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return HermitianOperator(scale * 0.5 * (a + a.conj().T))


def random_unitary(dim: int, seed=None) -> np.ndarray:
    """Haar-random unitary via QR with the phase correction."""
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(a)
    d = np.diagonal(r)
    return q * (d / np.abs(d))

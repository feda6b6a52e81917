"""Madelung split, quantum potential and the hydrodynamic (HJ + continuity)
system on grids.

Conventions fixed by closed-form oracles:

* ``Q = -(hbar^2 / 2m) lap(sqrt rho) / sqrt rho`` is canonical; the expansion
  ``-(hbar^2 / 8m) (2 lap(rho)/rho - |grad rho|^2/rho^2)`` is an independent
  cross-check.
* The HJ equation written with a Fisher coupling ``lam`` closes onto the
  Schrödinger equation for ``lam = hbar^2 / 4`` (``hbar = 2 sqrt(lam)``).
* ``int rho Q = +(hbar^2 / 8m) int |grad rho|^2 / rho`` for decaying or
  periodic densities, so it is nonnegative.
* Osmotic velocity ``u = D grad log rho`` with ``D = hbar / 2m`` gives
  ``Q = -m (u^2 / 2 + D div u)``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import config
from .fisher import MASK_LEVEL
from .grid import DensityGrid, Grid, derivative, gradient, laplacian

NORM_TOL = 1e-8


def lam_consistent(hbar: float) -> float:
    """Fisher coupling that makes the HJ equation equivalent to the
    Schrödinger equation."""
    return hbar**2 / 4


def lam_printed(hbar: float) -> float:
    """The ``(2 hbar)^2`` coupling, kept for comparison."""
    return (2 * hbar) ** 2


# ---------------------------------------------------------------------------
# types

@dataclass(frozen=True, eq=False)
class Wavefield:
    psi: np.ndarray
    grid: Grid
    hbar: float = 1.0
    mass: float = 1.0
    V: np.ndarray | None = None

    def __post_init__(self):
        psi = np.array(self.psi, dtype=complex)
        if psi.shape != self.grid.shape:
            raise ValueError("psi does not match the grid")
        if not np.all(np.isfinite(psi)):
            raise ValueError("psi has non-finite values")
        if not (self.hbar > 0 and self.mass > 0):
            raise ValueError("hbar and mass must be positive")
        n = self.grid.integrate(np.abs(psi) ** 2)
        if abs(n - 1) > NORM_TOL:
            raise ValueError(f"wavefield is not normalized (mass {n!r})")
        psi.setflags(write=False)
        object.__setattr__(self, "psi", psi)
        if self.V is not None:
            V = np.array(self.V, dtype=float)
            if V.shape != self.grid.shape:
                raise ValueError("potential does not match the grid")
            V.setflags(write=False)
            object.__setattr__(self, "V", V)

    @classmethod
    def normalized(cls, psi, grid: Grid, hbar=1.0, mass=1.0, V=None) -> "Wavefield":
        psi = np.asarray(psi, dtype=complex)
        return cls(psi / np.sqrt(grid.integrate(np.abs(psi) ** 2)), grid, hbar, mass, V)

    @property
    def potential(self) -> np.ndarray:
        return np.zeros(self.grid.shape) if self.V is None else self.V

    def density(self) -> DensityGrid:
        return DensityGrid(np.abs(self.psi) ** 2, self.grid)

    def replace(self, psi) -> "Wavefield":
        return Wavefield(psi, self.grid, self.hbar, self.mass, self.V)


@dataclass(frozen=True, eq=False)
class MadelungPair:
    """``rho`` and the phase action ``S`` (so ``psi = sqrt(rho) exp(iS/hbar)``).

    ``mask`` is True on nodes excluded for small amplitude; ``flagged`` marks
    nodes whose unwrapping path crosses a masked node (their ``S`` is only
    known modulo ``2 pi hbar``).
    """

    rho: DensityGrid
    S: np.ndarray
    hbar: float
    mask: np.ndarray
    flagged: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.flagged is None:
            object.__setattr__(self, "flagged", np.zeros(self.rho.grid.shape, dtype=bool))

    @property
    def grid(self) -> Grid:
        return self.rho.grid

    def phase_factor(self) -> np.ndarray:
        return np.exp(1j * self.S / self.hbar)


# ---------------------------------------------------------------------------
# Madelung split

def amplitude_mask(amp: np.ndarray) -> np.ndarray:
    """True where ``|psi| < 1e-10 max|psi|``."""
    return amp < MASK_LEVEL * amp.max()


def _unwrap_from(phase: np.ndarray, blocked: np.ndarray, axis: int, pivot: int,
                 base: np.ndarray, base_blocked: np.ndarray):
    """Unwrap along ``axis`` outwards from index ``pivot`` whose values are
    ``base``; blockage propagates outwards along each line."""
    ph = np.moveaxis(phase, axis, 0)
    bl = np.moveaxis(blocked, axis, 0)
    out = np.empty_like(ph)
    bad = np.empty_like(bl)
    out[pivot] = base
    bad[pivot] = base_blocked
    for seg in (slice(pivot, None), slice(pivot, None, -1)):
        p = ph[seg]
        steps = np.diff(p, axis=0)
        steps = (steps + np.pi) % (2 * np.pi) - np.pi
        out[seg][1:] = base + np.cumsum(steps, axis=0)
        bad[seg][1:] = base_blocked | np.logical_or.accumulate(bl[seg][1:], axis=0)
    return np.moveaxis(out, 0, axis), np.moveaxis(bad, 0, axis)


def unwrap_phase(psi: np.ndarray, mask: np.ndarray | None = None):
    """Unwrapped phase along a comb spanning tree rooted at the max-``|psi|``
    node: first along axis 0 through the root, then axis 1 from that line,
    then axis 2.  Returns ``(phase, flagged)``; ``flagged`` marks nodes whose
    tree path passes through a masked node."""
    psi = np.asarray(psi, dtype=complex)
    amp = np.abs(psi)
    if mask is None:
        mask = amplitude_mask(amp)
    raw = np.angle(psi)
    root = np.unravel_index(np.argmax(amp), psi.shape)
    phase = np.array(raw[root], dtype=float)
    bad = np.array(bool(mask[root]))
    for ax in range(psi.ndim):
        # restrict to the sub-block already reached: fixed root index on later axes
        idx = tuple(slice(None) if a <= ax else root[a] for a in range(psi.ndim))
        sub_raw = raw[idx]
        sub_mask = mask[idx]
        phase, bad = _unwrap_from(sub_raw, sub_mask, ax, root[ax], phase, bad)
    return phase, bad | mask


def unwrap_phase_bfs(psi: np.ndarray, mask: np.ndarray | None = None):
    """Breadth-first unwrapping over unmasked nearest neighbours.  Slower
    reference implementation; unreachable nodes are flagged."""
    psi = np.asarray(psi, dtype=complex)
    amp = np.abs(psi)
    if mask is None:
        mask = amplitude_mask(amp)
    raw = np.angle(psi)
    out = raw.copy()
    seen = np.zeros(psi.shape, dtype=bool)
    root = np.unravel_index(np.argmax(amp), psi.shape)
    seen[root] = True
    q = deque([root])
    while q:
        node = q.popleft()
        for ax in range(psi.ndim):
            for d in (-1, 1):
                nb = list(node)
                nb[ax] += d
                if not 0 <= nb[ax] < psi.shape[ax]:
                    continue
                nb = tuple(nb)
                if seen[nb] or mask[nb]:
                    continue
                step = (raw[nb] - raw[node] + np.pi) % (2 * np.pi) - np.pi
                out[nb] = out[node] + step
                seen[nb] = True
                q.append(nb)
    return out, ~seen


def madelung_split(w: Wavefield) -> MadelungPair:
    amp = np.abs(w.psi)
    mask = amplitude_mask(amp)
    phase, flagged = unwrap_phase(w.psi, mask)
    rho = DensityGrid(amp**2, w.grid)
    return MadelungPair(rho, w.hbar * phase, w.hbar, mask, flagged)


def madelung_join(m: MadelungPair, mass: float = 1.0, V=None) -> Wavefield:
    psi = np.sqrt(m.rho.values) * m.phase_factor()
    return Wavefield.normalized(psi, m.grid, m.hbar, mass, V)


# ---------------------------------------------------------------------------
# quantum potential

def _rho_values(rho) -> tuple[np.ndarray, Grid]:
    if isinstance(rho, DensityGrid):
        return rho.values, rho.grid
    if isinstance(rho, MadelungPair):
        return rho.rho.values, rho.grid
    raise TypeError("expected a DensityGrid")


def density_mask(rho) -> np.ndarray:
    """Masked nodes: ``sqrt(rho) < 1e-10 max sqrt(rho)``."""
    v, _ = _rho_values(rho)
    return amplitude_mask(np.sqrt(v))


def quantum_potential(rho, hbar: float | None = None, mass: float = 1.0,
                      accuracy: int = 4) -> np.ndarray:
    """``-(hbar^2/2m) lap(sqrt rho)/sqrt rho``; NaN on masked nodes."""
    hbar = config.resolve(hbar)
    v, grid = _rho_values(rho)
    r = np.sqrt(v)
    mask = amplitude_mask(r)
    lap = laplacian(r, grid, accuracy)
    Q = np.full(v.shape, np.nan)
    Q[~mask] = -(hbar**2 / (2 * mass)) * lap[~mask] / r[~mask]
    return Q


def quantum_potential_expanded(rho, hbar: float | None = None, mass: float = 1.0,
                               inverse_metric=None, accuracy: int = 4) -> np.ndarray:
    """``-(hbar^2/8m) g^ik (2 d_i d_k rho / rho - d_i rho d_k rho / rho^2)``
    from derivatives of ``rho`` itself; NaN on masked nodes."""
    hbar = config.resolve(hbar)
    v, grid = _rho_values(rho)
    n = grid.ndim
    gi = np.eye(n) if inverse_metric is None else np.asarray(inverse_metric, float)
    mask = amplitude_mask(np.sqrt(v))
    g = gradient(v, grid, accuracy)
    acc = np.zeros(v.shape)
    safe = np.where(mask, 1.0, v)
    for i in range(n):
        for k in range(n):
            if gi[i, k] == 0:
                continue
            if i == k:
                dik = derivative(v, i, grid.spacing[i], deriv=2, periodic=grid.periodic,
                                 accuracy=accuracy)
            else:
                dik = derivative(g[i], k, grid.spacing[k], periodic=grid.periodic,
                                 accuracy=accuracy)
            acc += gi[i, k] * (2 * dik / safe - g[i] * g[k] / safe**2)
    Q = -(hbar**2 / (8 * mass)) * acc
    Q[mask] = np.nan
    return Q


def printed_form_factors(hbar: float = 1.0) -> dict:
    """Constants relating the alternative written forms of ``Q`` to the
    canonical one, ``form = factor * Q``.

    * ``"one_dim_expansion"``: ``-(hbar^2/8m)[2 rho''/rho - (rho'/rho)^2]``
    * ``"fisher_variation"``: ``-2 hbar^2 g^mn [d rho d rho / rho^2 - 2 dd rho / rho]``
      with ``g^mn = delta/m``
    * ``"expanded_positive"``: ``+(hbar^2/8m) g^ik (2 dd rho / rho - d rho d rho / rho^2)``
    """
    return {"one_dim_expansion": 1.0, "fisher_variation": -16.0, "expanded_positive": -1.0}


def masked_integral(grid: Grid, f: np.ndarray) -> float:
    return float(grid.integrate(np.where(np.isnan(f), 0.0, f)))


def weighted_norm(grid: Grid, rho: np.ndarray, r: np.ndarray) -> float:
    """``sqrt(int rho r^2)`` over finite (unmasked) nodes."""
    return float(np.sqrt(masked_integral(grid, rho * r**2)))


# ---------------------------------------------------------------------------
# HJ and continuity residuals

def _phase_gradient(m: MadelungPair, accuracy: int) -> list[np.ndarray]:
    # through exp(iS/hbar) so 2 pi jumps in S never matter
    e = m.phase_factor()
    return [m.hbar * (np.conj(e) * d).imag for d in gradient(e, m.grid, accuracy)]


def hj_residual(m: MadelungPair, V=None, dS_dt=None, mass: float = 1.0,
                lam: float | None = None, accuracy: int = 4) -> np.ndarray:
    """``dS/dt + (1/2m)[|grad S|^2 + lam(|grad rho|^2/rho^2 - 2 lap rho / rho)] + V``.

    ``lam`` defaults to ``hbar^2/4``.  NaN on masked nodes.
    """
    if dS_dt is None:
        raise ValueError("hj_residual needs the time derivative of S")
    hbar = m.hbar
    lam = lam_consistent(hbar) if lam is None else lam
    grid = m.grid
    v = m.rho.values
    V = np.zeros(grid.shape) if V is None else np.asarray(V, float)
    gS = _phase_gradient(m, accuracy)
    # the lam bracket equals (8m/hbar^2) Q; evaluate it
    # through the sqrt form, which is the better-conditioned discretization
    Q = quantum_potential(m.rho, hbar, mass, accuracy)
    bracket = (8 * mass / hbar**2) * Q
    res = np.asarray(dS_dt) + (sum(g * g for g in gS) + lam * bracket) / (2 * mass) + V
    res[m.mask] = np.nan
    return res


def continuity_residual(m: MadelungPair, drho_dt=None, mass: float = 1.0,
                        accuracy: int = 4) -> np.ndarray:
    """``d rho/dt + div(rho grad S / m)``; NaN on masked nodes."""
    if drho_dt is None:
        raise ValueError("continuity_residual needs the time derivative of rho")
    grid = m.grid
    v = m.rho.values
    gS = _phase_gradient(m, accuracy)
    div = sum(derivative(v * gS[a] / mass, a, grid.spacing[a], periodic=grid.periodic,
                         accuracy=accuracy) for a in range(grid.ndim))
    res = np.asarray(drho_dt) + div
    res[m.mask] = np.nan
    return res


def time_derivatives(before: Wavefield, after: Wavefield, span: float):
    """Central time derivatives of ``rho`` and ``S`` from snapshots ``span``
    apart.  The phase difference is taken between the two wavefunctions, so
    no unwrapping in time is needed."""
    d_rho = (np.abs(after.psi) ** 2 - np.abs(before.psi) ** 2) / span
    d_S = before.hbar * np.angle(after.psi * np.conj(before.psi)) / span
    return d_rho, d_S


@dataclass(frozen=True)
class ResidualNorms:
    hj: float
    continuity: float
    mass_drift: float


def madelung_residuals(before: Wavefield, mid: Wavefield, after: Wavefield, span: float,
                       accuracy: int = 4, lam: float | None = None) -> ResidualNorms:
    """rho-weighted L2 norms of both residuals at the middle snapshot;
    ``span`` is the time between ``before`` and ``after``."""
    m = madelung_split(mid)
    d_rho, d_S = time_derivatives(before, after, span)
    hj = hj_residual(m, mid.potential, d_S, mid.mass, lam, accuracy)
    ct = continuity_residual(m, d_rho, mid.mass, accuracy)
    v = m.rho.values
    safe = np.where(m.mask, 1.0, v)
    grid = mid.grid
    drift = abs(grid.integrate(np.abs(after.psi) ** 2) - grid.integrate(np.abs(before.psi) ** 2))
    # continuity residual has units of rho; weight by 1/rho for a comparable norm
    return ResidualNorms(weighted_norm(grid, v, hj), weighted_norm(grid, v, ct / safe), drift)


# ---------------------------------------------------------------------------
# entropy and osmotic velocity

def entropy(rho: DensityGrid) -> float:
    """``-int rho log rho`` (zero nodes contribute zero)."""
    v = rho.values
    pos = v > 0
    f = np.zeros_like(v)
    f[pos] = -v[pos] * np.log(v[pos])
    return float(rho.grid.integrate(f))


def fisher_trace(rho: DensityGrid, accuracy: int = 4) -> float:
    """``int |grad rho|^2 / rho`` (the unhalved functional), evaluated as
    ``4 int |grad sqrt(rho)|^2`` so nothing is divided by a small density."""
    r = np.sqrt(rho.values)
    g = gradient(r, rho.grid, accuracy)
    return float(4 * rho.grid.integrate(sum(gi * gi for gi in g)))


@dataclass(frozen=True)
class EntropyRate:
    times: np.ndarray
    entropy: np.ndarray
    rate: np.ndarray          # central differences at interior times
    fisher_rate: np.ndarray   # D * int |grad rho|^2 / rho at the same times

    @property
    def relative_gap(self) -> np.ndarray:
        return np.abs(self.rate - self.fisher_rate) / np.abs(self.fisher_rate)


def entropy_rate(snapshots, D: float, accuracy: int = 4) -> EntropyRate:
    """Entropy production from a sequence of ``(t, DensityGrid)`` against
    ``D Tr F``.  Rates use central differences, so the first and last
    snapshots only feed their neighbours."""
    ts = np.array([t for t, _ in snapshots], dtype=float)
    if ts.size < 3:
        raise ValueError("entropy_rate needs at least three snapshots")
    S = np.array([entropy(r) for _, r in snapshots])
    rate = (S[2:] - S[:-2]) / (ts[2:] - ts[:-2])
    fr = np.array([D * fisher_trace(r, accuracy) for _, r in snapshots[1:-1]])
    return EntropyRate(ts[1:-1], S, rate, fr)


def osmotic_velocity(rho, hbar: float | None = None, mass: float = 1.0,
                     accuracy: int = 4) -> list[np.ndarray]:
    """``u = D grad log rho`` with ``D = hbar/2m``; NaN on masked nodes."""
    hbar = config.resolve(hbar)
    v, grid = _rho_values(rho)
    D = hbar / (2 * mass)
    mask = amplitude_mask(np.sqrt(v))
    logv = np.log(np.where(mask, 1.0, v))
    return [np.where(mask, np.nan, D * g) for g in gradient(logv, grid, accuracy)]


@dataclass
class OsmoticReport:
    u: list
    Q: np.ndarray
    Q_osmotic: np.ndarray
    max_residual: float
    unscaled_max_residual: float
    kept: int
    sign: float = -1.0
    relation: str = "Q = -m (u^2/2 + D div u), D = hbar/2m"


def osmotic_checks(rho, hbar: float | None = None, mass: float = 1.0, accuracy: int = 4,
                   support: float = 1e-3) -> OsmoticReport:
    """Compare ``Q`` with ``-m(u^2/2 + D div u)``.

    Residuals are taken where ``sqrt(rho) >= support * max sqrt(rho)`` and
    away from decay edges.  ``unscaled_max_residual`` compares ``Q`` with
    ``u^2/2 + D div u`` as written without the ``-m`` factor.
    """
    hbar = config.resolve(hbar)
    v, grid = _rho_values(rho)
    D = hbar / (2 * mass)
    u = osmotic_velocity(rho, hbar, mass, accuracy)
    uu = [np.nan_to_num(c) for c in u]
    div = sum(derivative(uu[a], a, grid.spacing[a], periodic=grid.periodic, accuracy=accuracy)
              for a in range(grid.ndim))
    form = 0.5 * sum(c * c for c in uu) + D * div
    Q = quantum_potential(rho, hbar, mass, accuracy)
    Qo = np.where(np.isnan(Q), np.nan, -mass * form)
    r = np.sqrt(v)
    keep = (r >= support * r.max()) & ~grid.boundary_mask(2 * accuracy) & ~np.isnan(Q)
    res = float(np.max(np.abs(Q - Qo)[keep])) if keep.any() else 0.0
    raw = float(np.max(np.abs(Q - form)[keep])) if keep.any() else 0.0
    return OsmoticReport(u, Q, Qo, res, raw, int(np.count_nonzero(keep)))


# ---------------------------------------------------------------------------
# integral identity and Lagrangian

@dataclass
class IdentityReport:
    lhs: float                # int rho Q
    rhs: float                # +(hbar^2/8m) int |grad rho|^2/rho
    relative_gap: float
    rhs_negative_form: float  # -(hbar^2/8m) int |grad rho|^2/rho
    relative_gap_negative_form: float
    boundary_term: float      # int lap(rho), zero for decaying or periodic rho
    masked: int

    @property
    def zero_consistent(self) -> bool:
        return abs(self.lhs) < 1e-12 and abs(self.rhs) < 1e-12

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in (
            "lhs", "rhs", "relative_gap", "rhs_negative_form",
            "relative_gap_negative_form", "boundary_term", "masked")}


def _rel(a: float, b: float) -> float:
    if b == 0:
        return 0.0 if abs(a) < 1e-12 else float("inf")
    return abs(a - b) / abs(b)


def fisher_q_identity(rho: DensityGrid, hbar: float | None = None, mass: float = 1.0,
                      accuracy: int = 4) -> IdentityReport:
    """``int rho Q`` against ``(hbar^2/8m) int |grad rho|^2 / rho``.

    Integration by parts needs a vanishing boundary term: decay grids (edge
    values below ``1e-10 max``) and periodic grids both qualify.
    """
    hbar = config.resolve(hbar)
    v, grid = _rho_values(rho)
    Q = quantum_potential(rho, hbar, mass, accuracy)
    lhs = masked_integral(grid, v * Q)
    F = fisher_trace(rho, accuracy)
    rhs = hbar**2 / (8 * mass) * F
    bt = float(grid.integrate(laplacian(v, grid, accuracy)))
    return IdentityReport(lhs, rhs, _rel(lhs, rhs), -rhs, _rel(lhs, -rhs), bt,
                          int(np.count_nonzero(np.isnan(Q))))


@dataclass
class LagrangianReport:
    classical: float
    information: float
    total: float
    lam: float
    fisher: float          # (1/2m) int |grad rho|^2 / rho
    c: float               # the constant in hbar = 2 sqrt(c)
    hbar_from_c: float


def quantum_lagrangian(m: MadelungPair, V=None, dS_dt=None, mass: float = 1.0,
                       lam: float | None = None, accuracy: int = 4) -> LagrangianReport:
    """Spatial Lagrangian density integrated at one instant:
    ``L_CL = int rho (dS/dt + |grad S|^2/2m + V)`` and ``L_QM = L_CL + lam I``
    with ``I = (1/2m) int |grad rho|^2 / rho``."""
    if dS_dt is None:
        raise ValueError("quantum_lagrangian needs the time derivative of S")
    hbar = m.hbar
    lam = lam_consistent(hbar) if lam is None else lam
    grid = m.grid
    v = m.rho.values
    V = np.zeros(grid.shape) if V is None else np.asarray(V, float)
    gS = _phase_gradient(m, accuracy)
    dens = np.where(m.mask, 0.0, v * (np.asarray(dS_dt) + sum(g * g for g in gS) / (2 * mass) + V))
    classical = float(grid.integrate(dens))
    fisher = fisher_trace(m.rho, accuracy) / (2 * mass)
    info = lam * fisher
    return LagrangianReport(classical, info, classical + info, lam, fisher, lam,
                            2 * np.sqrt(lam))


def lagrangian_variation(m: MadelungPair, eta: np.ndarray, V=None, dS_dt=None,
                         mass: float = 1.0, lam: float | None = None, eps: float = 1e-6,
                         accuracy: int = 4) -> tuple[float, float]:
    """Directional derivative of ``L_QM`` along ``rho -> rho + eps eta``
    (central difference) and the pairing ``int eta * hj_residual``.

    The two agree when ``hj_residual`` is the first variation of ``L_QM``.
    """
    grid = m.grid

    def L(sign):
        r = DensityGrid(m.rho.values + sign * eps * np.asarray(eta), grid)
        mm = MadelungPair(r, m.S, m.hbar, m.mask, m.flagged)
        return quantum_lagrangian(mm, V, dS_dt, mass, lam, accuracy).total

    fd = (L(1) - L(-1)) / (2 * eps)
    res = hj_residual(m, V, dS_dt, mass, lam, accuracy)
    return fd, masked_integral(grid, np.asarray(eta) * res)

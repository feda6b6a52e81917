"""Schrödinger time stepping on flat grids, snapshot streams and the heat
kernel used for entropy-production checks.

Two schemes:

* ``"spectral"``: Strang split-step Fourier (periodic grids; decay grids are
  accepted when the field stays negligible at the edge);
* ``"implicit"``: implicit midpoint (Crank-Nicolson) with a sparse 4th-order
  Laplacian and zero Dirichlet data outside the box.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .grid import DensityGrid, Grid, _central
from .potential import Wavefield

SCHEMES = ("spectral", "implicit")


class UnstableEvolution(RuntimeError):
    """Raised when the step diagnostics detect a broken run."""


def default_dt(grid: Grid, hbar: float = 1.0, mass: float = 1.0) -> float:
    """``1e-3 m h^2 / hbar`` with the smallest spacing; pair with a halving
    check."""
    return 1e-3 * mass * min(grid.spacing) ** 2 / hbar


def kinetic_symbol(grid: Grid, hbar: float, mass: float) -> np.ndarray:
    ks = np.meshgrid(*grid.wavenumbers(), indexing="ij")
    return hbar**2 / (2 * mass) * sum(k * k for k in ks)


def laplacian_matrix(grid: Grid, accuracy: int = 4) -> sp.csr_matrix:
    """Sparse finite-difference Laplacian.

    Periodic axes wrap; decay axes treat values outside the box as zero,
    which keeps the matrix symmetric.
    """
    ops = []
    for n, h in zip(grid.shape, grid.spacing):
        w = _central(2, accuracy)
        p = len(w) // 2
        offsets = list(range(-p, p + 1))
        diags = [np.full(n - abs(o), wk) for o, wk in zip(offsets, w)]
        D = sp.diags(diags, offsets, shape=(n, n), format="lil")
        if grid.periodic:
            for o, wk in zip(offsets, w):
                if o > 0:
                    for i in range(o):
                        D[n - o + i, i] += wk
                        D[i, n - o + i] += wk
        ops.append(D.tocsr() / h**2)
    eyes = [sp.identity(n, format="csr") for n in grid.shape]
    L = None
    for ax in range(grid.ndim):
        term = None
        for b in range(grid.ndim):
            f = ops[ax] if b == ax else eyes[b]
            term = f if term is None else sp.kron(term, f, format="csr")
        L = term if L is None else L + term
    return L.tocsr()


def energy(w: Wavefield) -> float:
    """``<H>`` with the spectral kinetic energy."""
    grid = w.grid
    phik = np.fft.fftn(w.psi)
    T = kinetic_symbol(grid, w.hbar, w.mass)
    kin = np.sum(T * np.abs(phik) ** 2) / np.sum(np.abs(phik) ** 2)
    pot = grid.integrate(w.potential * np.abs(w.psi) ** 2)
    norm = grid.integrate(np.abs(w.psi) ** 2)
    return float(kin + pot / norm)


def moments(w: Wavefield) -> tuple[np.ndarray, np.ndarray]:
    """Mean position and per-axis standard deviation."""
    rho = np.abs(w.psi) ** 2
    mesh = w.grid.mesh()
    mean = np.array([w.grid.integrate(x * rho) for x in mesh])
    var = np.array([w.grid.integrate((x - m) ** 2 * rho) for x, m in zip(mesh, mean)])
    return mean, np.sqrt(var)


@dataclass
class Snapshot:
    t: float
    field: Wavefield
    norm: float
    energy: float
    mean: list
    sigma: list

    def diagnostics(self) -> dict:
        return {"t": self.t, "norm": self.norm, "energy": self.energy,
                "mean": list(self.mean), "sigma": list(self.sigma)}


def _snapshot(t: float, w: Wavefield) -> Snapshot:
    mean, sig = moments(w)
    return Snapshot(float(t), w, float(w.grid.integrate(np.abs(w.psi) ** 2)), energy(w),
                    [float(v) for v in mean], [float(v) for v in sig])


@dataclass
class EvolutionResult:
    final: Wavefield
    snapshots: list = field(default_factory=list)
    scheme: str = "spectral"
    dt: float = 0.0
    steps: int = 0
    warnings: list = field(default_factory=list)

    @property
    def norm_drift(self) -> float:
        n = [s.norm for s in self.snapshots]
        return float(max(n) - min(n)) if n else 0.0

    @property
    def energy_drift(self) -> float:
        e = [s.energy for s in self.snapshots]
        return float(max(e) - min(e)) if e else 0.0


def _step_diagnostics(w: Wavefield, dt: float, scheme: str) -> list[str]:
    notes = []
    Vmax = float(np.max(np.abs(w.potential)))
    if scheme == "spectral" and Vmax * dt / w.hbar > np.pi:
        notes.append(f"potential phase per step {Vmax * dt / w.hbar:.3g} exceeds pi")
    kmax = max(np.pi / h for h in w.grid.spacing)
    kin = w.hbar * kmax**2 / (2 * w.mass) * dt
    if kin > np.pi:
        notes.append(f"kinetic phase per step at the grid cutoff is {kin:.3g} rad")
    return notes


def evolve_se(w: Wavefield, dt: float | None = None, steps: int = 0, scheme: str = "spectral",
              snapshot_every: int | None = None, accuracy: int = 4,
              norm_guard: float = 1e-6) -> EvolutionResult:
    """Advance ``w`` by ``steps`` steps of size ``dt``.

    Snapshots are taken at step 0 and every ``snapshot_every`` steps (and
    always at the final step).  Raises :class:`UnstableEvolution` when the
    field stops being finite or the norm drifts by more than
    ``norm_guard``.
    """
    if scheme not in SCHEMES:
        raise ValueError(f"scheme must be one of {SCHEMES}")
    dt = default_dt(w.grid, w.hbar, w.mass) if dt is None else float(dt)
    if not dt > 0 or not np.isfinite(dt):
        raise UnstableEvolution(f"invalid time step {dt!r}")
    steps = int(steps)
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    every = snapshot_every or max(steps, 1)
    grid = w.grid
    hbar, m = w.hbar, w.mass
    V = w.potential
    notes = _step_diagnostics(w, dt, scheme)

    if scheme == "spectral":
        half_v = np.exp(-0.5j * dt * V / hbar)
        kin = np.exp(-1j * dt * kinetic_symbol(grid, hbar, m) / hbar)

        def step(psi):
            psi = half_v * psi
            psi = np.fft.ifftn(kin * np.fft.fftn(psi))
            return half_v * psi
    else:
        H = -(hbar**2 / (2 * m)) * laplacian_matrix(grid, accuracy) + sp.diags(V.ravel())
        I = sp.identity(H.shape[0], format="csc")
        lhs = (I + 0.5j * dt / hbar * H).tocsc()
        rhs = (I - 0.5j * dt / hbar * H).tocsr()
        solve = spla.factorized(lhs)

        def step(psi):
            return solve(rhs @ psi.ravel()).reshape(grid.shape)

    psi = np.array(w.psi)
    snaps = [_snapshot(0.0, w)]
    n0 = snaps[0].norm
    for i in range(1, steps + 1):
        psi = step(psi)
        if i % every == 0 or i == steps:
            if not np.all(np.isfinite(psi)):
                raise UnstableEvolution(f"non-finite field at step {i}")
            cur = grid.integrate(np.abs(psi) ** 2)
            if abs(cur - n0) > norm_guard:
                raise UnstableEvolution(f"norm drifted by {cur - n0:.3g} at step {i}")
            snaps.append(_snapshot(i * dt, w.replace(psi)))
    return EvolutionResult(snaps[-1].field, snaps, scheme, dt, steps, notes)


def free_gaussian_sigma(t, sigma0: float, hbar: float = 1.0, mass: float = 1.0):
    """Width of a free minimum-uncertainty packet."""
    return np.sqrt(sigma0**2 + (hbar * np.asarray(t) / (2 * mass * sigma0)) ** 2)


def gaussian_packet(grid: Grid, sigma: float = 1.0, x0=0.0, k0=0.0, hbar: float = 1.0,
                    mass: float = 1.0, V=None) -> Wavefield:
    """Minimum-uncertainty packet with position width ``sigma`` per axis."""
    mesh = grid.mesh()
    x0 = np.broadcast_to(np.asarray(x0, float), (grid.ndim,))
    k0 = np.broadcast_to(np.asarray(k0, float), (grid.ndim,))
    arg = sum(-(x - a) ** 2 / (4 * sigma**2) + 1j * k * x for x, a, k in zip(mesh, x0, k0))
    return Wavefield.normalized(np.exp(arg), grid, hbar, mass, V)


def harmonic_potential(grid: Grid, omega: float = 1.0, mass: float = 1.0) -> np.ndarray:
    return 0.5 * mass * omega**2 * sum(x * x for x in grid.mesh())


# ---------------------------------------------------------------------------
# heat kernel

def heat_spread(rho: DensityGrid, D: float, t: float) -> DensityGrid:
    """Exact solution of ``d rho/dt = D lap rho`` on the grid's Fourier
    modes (the box is treated as a torus)."""
    ks = np.meshgrid(*rho.grid.wavenumbers(), indexing="ij")
    k2 = sum(k * k for k in ks)
    v = np.fft.ifftn(np.fft.fftn(rho.values) * np.exp(-D * k2 * t)).real
    v = np.clip(v, 0.0, None)
    # FFT rounding leaves ~1e-17 noise; keep the decay contract intact
    if not rho.grid.periodic:
        edge = rho.grid.boundary_mask(1)
        v[edge] = np.minimum(v[edge], 1e-12 * v.max())
    return DensityGrid(v, rho.grid).normalize()


# ---------------------------------------------------------------------------
# snapshot stream

def write_stream(result: EvolutionResult, out_dir, extra: dict | None = None) -> Path:
    """Write one CSV per snapshot (coordinates, Re psi, Im psi) plus
    ``manifest.json``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    first = result.snapshots[0].field
    grid = first.grid
    mesh = [c.ravel() for c in grid.mesh()]
    names = ["x", "y", "z"][: grid.ndim]
    entries = []
    for i, s in enumerate(result.snapshots):
        name = f"snapshot_{i:05d}.csv"
        cols = np.column_stack(mesh + [s.field.psi.real.ravel(), s.field.psi.imag.ravel()])
        header = ",".join(names + ["re", "im"])
        np.savetxt(out / name, cols, delimiter=",", header=header, comments="", fmt="%.17g")
        d = s.diagnostics()
        d["file"] = name
        entries.append(d)
    manifest = {
        "scheme": result.scheme,
        "dt": result.dt,
        "steps": result.steps,
        "hbar": first.hbar,
        "mass": first.mass,
        "grid": grid.header(),
        "snapshots": entries,
        "warnings": result.warnings,
    }
    if extra:
        manifest.update(extra)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return out / "manifest.json"

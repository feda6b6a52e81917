"""Uniform structured grids, finite-difference stencils, quadrature and
DensityGrid serialization.

Grids are 1-D to 3-D with ``ij`` indexing.  Periodic grids exclude the right
endpoint; decay grids include both ends and expect the sampled function to be
negligible on the boundary.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

BOUNDARIES = ("periodic", "decay")

# relative boundary level a decay density must stay under
DECAY_LEVEL = 1e-10


@dataclass(frozen=True)
class Grid:
    shape: tuple[int, ...]
    spacing: tuple[float, ...]
    origin: tuple[float, ...]
    boundary: str = "decay"

    def __post_init__(self):
        object.__setattr__(self, "shape", tuple(int(s) for s in self.shape))
        object.__setattr__(self, "spacing", tuple(float(h) for h in self.spacing))
        object.__setattr__(self, "origin", tuple(float(o) for o in self.origin))
        if not 1 <= len(self.shape) <= 3:
            raise ValueError("grids must have 1 to 3 axes")
        if not len(self.shape) == len(self.spacing) == len(self.origin):
            raise ValueError("shape, spacing and origin lengths differ")
        if any(s < 5 for s in self.shape):
            raise ValueError("every axis needs at least 5 nodes")
        if any(not h > 0 for h in self.spacing):
            raise ValueError("spacing must be positive")
        if self.boundary not in BOUNDARIES:
            raise ValueError(f"boundary must be one of {BOUNDARIES}")

    @classmethod
    def uniform(cls, n, lo, hi, boundary="decay", ndim=None):
        """Build a grid on the box ``[lo, hi]^ndim``.

        ``n``, ``lo`` and ``hi`` may be scalars (broadcast over ``ndim``
        axes) or per-axis sequences.
        """
        if ndim is None:
            ndim = max(np.size(n), np.size(lo), np.size(hi))
        n = np.broadcast_to(np.asarray(n, dtype=int), (ndim,))
        lo = np.broadcast_to(np.asarray(lo, dtype=float), (ndim,))
        hi = np.broadcast_to(np.asarray(hi, dtype=float), (ndim,))
        if boundary == "periodic":
            h = (hi - lo) / n
        else:
            h = (hi - lo) / (n - 1)
        return cls(tuple(n), tuple(h), tuple(lo), boundary)

    @property
    def ndim(self) -> int:
        return len(self.shape)

    @property
    def periodic(self) -> bool:
        return self.boundary == "periodic"

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def axes(self) -> list[np.ndarray]:
        return [o + h * np.arange(n) for n, h, o in zip(self.shape, self.spacing, self.origin)]

    def mesh(self) -> list[np.ndarray]:
        return np.meshgrid(*self.axes(), indexing="ij")

    def weights(self) -> np.ndarray:
        """Trapezoid weights (the rectangle rule on periodic axes)."""
        w = np.ones(self.shape)
        for ax, n in enumerate(self.shape):
            if self.periodic:
                continue
            wa = np.ones(n)
            wa[0] = wa[-1] = 0.5
            shape = [1] * self.ndim
            shape[ax] = n
            w = w * wa.reshape(shape)
        return w * self.cell_volume

    def integrate(self, f):
        return np.sum(self.weights() * f)

    def boundary_mask(self, width: int = 2) -> np.ndarray:
        """True on nodes within ``width`` of a nonperiodic edge."""
        mask = np.zeros(self.shape, dtype=bool)
        if self.periodic:
            return mask
        for ax in range(self.ndim):
            idx = [slice(None)] * self.ndim
            idx[ax] = slice(0, width)
            mask[tuple(idx)] = True
            idx[ax] = slice(-width, None)
            mask[tuple(idx)] = True
        return mask

    def refined(self, factor: int = 2) -> "Grid":
        """Same box with the spacing divided by ``factor``."""
        if self.periodic:
            shape = tuple(n * factor for n in self.shape)
        else:
            shape = tuple((n - 1) * factor + 1 for n in self.shape)
        spacing = tuple(h / factor for h in self.spacing)
        return Grid(shape, spacing, self.origin, self.boundary)

    def wavenumbers(self) -> list[np.ndarray]:
        return [2 * np.pi * np.fft.fftfreq(n, d=h) for n, h in zip(self.shape, self.spacing)]

    def header(self) -> dict:
        return {
            "dims": self.ndim,
            "shape": list(self.shape),
            "spacing": list(self.spacing),
            "origin": list(self.origin),
            "boundary": self.boundary,
        }

    @classmethod
    def from_header(cls, header: dict) -> "Grid":
        return cls(tuple(header["shape"]), tuple(header["spacing"]),
                   tuple(header["origin"]), header["boundary"])


# ---------------------------------------------------------------------------
# finite differences

def fd_weights(offsets: Sequence[float], deriv: int) -> np.ndarray:
    """Fornberg weights for the ``deriv``-th derivative at 0 on ``offsets``
    (unit spacing)."""
    x = np.asarray(offsets, dtype=float)
    n = len(x)
    c = np.zeros((n, deriv + 1))
    c1, c4 = 1.0, x[0]
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, deriv)
        c2 = 1.0
        c5, c4 = c4, x[i]
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, deriv]


def _central(deriv: int, accuracy: int) -> np.ndarray:
    p = accuracy // 2 + (1 if deriv > 2 else 0)
    return fd_weights(np.arange(-p, p + 1), deriv)


def derivative(f: np.ndarray, axis: int, h: float, *, deriv: int = 1,
               periodic: bool = False, accuracy: int = 4) -> np.ndarray:
    """Central finite difference of ``f`` along ``axis``.

    Nonperiodic axes use one-sided stencils of the same width on the
    outermost nodes; those nodes are lower order and should be masked out
    of any assertion.
    """
    if accuracy % 2 or accuracy < 2:
        raise ValueError("accuracy must be a positive even integer")
    f = np.asarray(f)
    w = _central(deriv, accuracy)
    p = len(w) // 2
    n = f.shape[axis]
    if n < len(w):
        raise ValueError("axis too short for the stencil")
    out = np.zeros_like(f, dtype=np.result_type(f, float))
    fm = np.moveaxis(f, axis, 0)
    om = np.moveaxis(out, axis, 0)
    if periodic:
        for k, wk in zip(range(-p, p + 1), w):
            if wk:
                om += wk * np.roll(fm, -k, axis=0)
        return out / h**deriv
    for k, wk in zip(range(-p, p + 1), w):
        if wk:
            om[p:n - p] += wk * fm[p + k:n - p + k]
    width = len(w)
    for i in range(p):
        wl = fd_weights(np.arange(width) - i, deriv)
        om[i] = np.tensordot(wl, fm[:width], axes=(0, 0))
        wr = fd_weights(np.arange(width) - (width - 1 - i), deriv)
        om[n - 1 - i] = np.tensordot(wr, fm[n - width:], axes=(0, 0))
    return out / h**deriv


def gradient(f: np.ndarray, grid: Grid, accuracy: int = 4) -> list[np.ndarray]:
    return [derivative(f, ax, grid.spacing[ax], periodic=grid.periodic, accuracy=accuracy)
            for ax in range(grid.ndim)]


def laplacian(f: np.ndarray, grid: Grid, accuracy: int = 4) -> np.ndarray:
    return sum(derivative(f, ax, grid.spacing[ax], deriv=2, periodic=grid.periodic,
                          accuracy=accuracy)
               for ax in range(grid.ndim))


def hessian(f: np.ndarray, grid: Grid, accuracy: int = 4) -> np.ndarray:
    """Array of shape ``(ndim, ndim) + grid.shape``."""
    n = grid.ndim
    out = np.empty((n, n) + np.shape(f), dtype=np.result_type(f, float))
    grads = gradient(f, grid, accuracy)
    for i in range(n):
        out[i, i] = derivative(f, i, grid.spacing[i], deriv=2, periodic=grid.periodic,
                               accuracy=accuracy)
        for j in range(i + 1, n):
            out[i, j] = out[j, i] = derivative(grads[i], j, grid.spacing[j],
                                               periodic=grid.periodic, accuracy=accuracy)
    return out


def spectral_derivative(f: np.ndarray, grid: Grid, axis: int, deriv: int = 1) -> np.ndarray:
    """FFT derivative; exact for band-limited periodic data."""
    k = grid.wavenumbers()[axis]
    shape = [1] * grid.ndim
    shape[axis] = -1
    fk = np.fft.fft(f, axis=axis) * (1j * k.reshape(shape)) ** deriv
    out = np.fft.ifft(fk, axis=axis)
    return out if np.iscomplexobj(f) else out.real


# ---------------------------------------------------------------------------
# density grids

@dataclass(frozen=True)
class DensityGrid:
    """Nonnegative values sampled on a :class:`Grid`."""

    values: np.ndarray
    grid: Grid
    clamped: int = field(default=0, compare=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise ValueError(f"values shape {v.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("density has non-finite values")
        vmax = float(v.max(initial=0.0))
        if vmax <= 0:
            raise ValueError("density is identically zero")
        if v.min() < -1e-12 * vmax:
            raise ValueError("density has negative values")
        v = np.clip(v, 0.0, None)
        if self.grid.boundary == "decay":
            edge = v[self.grid.boundary_mask(1)]
            if edge.max() >= DECAY_LEVEL * vmax:
                raise ValueError("decay boundary requires values below "
                                 f"{DECAY_LEVEL:g} * max on the edge")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, func, grid: Grid, normalize: bool = True) -> "DensityGrid":
        d = cls(func(*grid.mesh()), grid)
        return d.normalize() if normalize else d

    @property
    def ndim(self) -> int:
        return self.grid.ndim

    def mass(self) -> float:
        return float(self.grid.integrate(self.values))

    def normalize(self) -> "DensityGrid":
        return DensityGrid(self.values / self.mass(), self.grid, self.clamped)

    def floored(self, floor: float) -> "DensityGrid":
        """Clamp entries below ``floor * max`` and renormalize; the number of
        clamped nodes accumulates in ``clamped``."""
        v = self.values
        lo = floor * v.max()
        n = int(np.count_nonzero(v < lo))
        if n == 0:
            return self
        v = np.maximum(v, lo)
        return DensityGrid(v / self.grid.integrate(v), self.grid, self.clamped + n)

    # -- serialization ---------------------------------------------------
    def to_csv(self, path) -> None:
        """One node per row: coordinates then value, ``repr`` precision."""
        path = Path(path)
        mesh = [m.ravel() for m in self.grid.mesh()]
        names = ["x", "y", "z"][: self.ndim]
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(names + ["value"])
            for row in zip(*mesh, self.values.ravel()):
                w.writerow([repr(float(c)) for c in row])

    def save(self, stem) -> tuple[Path, Path]:
        """Write ``<stem>.csv`` and the ``<stem>.json`` header."""
        stem = Path(stem)
        csv_path = stem.with_suffix(".csv")
        json_path = stem.with_suffix(".json")
        self.to_csv(csv_path)
        header = self.grid.header()
        header["csv"] = csv_path.name
        json_path.write_text(json.dumps(header, indent=2, sort_keys=True))
        return csv_path, json_path

    @classmethod
    def load(cls, path) -> "DensityGrid":
        """Load from a JSON header (or the CSV next to it)."""
        path = Path(path)
        json_path = path.with_suffix(".json")
        header = json.loads(json_path.read_text())
        grid = Grid.from_header(header)
        csv_path = json_path.parent / header.get("csv", path.with_suffix(".csv").name)
        return cls(read_grid_csv(csv_path, grid)[0], grid)


def read_grid_csv(path, grid: Grid) -> list[np.ndarray]:
    """Read the value columns of a node-per-row CSV back onto ``grid``.

    Rows must be in the C order :meth:`DensityGrid.to_csv` writes.
    """
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    body = np.array([[float(c) for c in r] for r in rows[1:]])
    if body.shape[0] != int(np.prod(grid.shape)):
        raise ValueError(f"{path}: expected {int(np.prod(grid.shape))} rows, got {body.shape[0]}")
    coords = body[:, : grid.ndim]
    expect = np.stack([m.ravel() for m in grid.mesh()], axis=1)
    if not np.allclose(coords, expect, rtol=1e-12, atol=1e-12 * max(1.0, np.abs(expect).max())):
        raise ValueError(f"{path}: coordinates do not match the header grid")
    return [body[:, c].reshape(grid.shape) for c in range(grid.ndim, body.shape[1])]

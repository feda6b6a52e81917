"""Projective-space Kähler geometry, information geometry of densities,
quantum potentials and Weyl curvature, with numerical verification suites."""

from . import config, evolution, fisher, grid, hilbert, kahler, observables, potential, weyl
from .config import hbar, set_hbar, using_hbar

__all__ = ["config", "evolution", "fisher", "grid", "hilbert", "kahler", "observables",
           "potential", "weyl", "hbar", "set_hbar", "using_hbar"]
__version__ = "0.1.0"

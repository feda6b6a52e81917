"""Process-wide physical constants.

``hbar`` doubles as the Kähler scale ``nu`` of the projective-space
geometry.  Functions that depend on it accept an explicit keyword and fall
back to the value configured here.
"""

from __future__ import annotations

import contextlib

_HBAR = 1.0


def hbar() -> float:
    return _HBAR


def set_hbar(value: float) -> None:
    global _HBAR
    if not value > 0:
        raise ValueError("hbar must be positive")
    _HBAR = float(value)


@contextlib.contextmanager
def using_hbar(value: float):
    """Temporarily override ``hbar``."""
    old = _HBAR
    set_hbar(value)
    try:
        yield
    finally:
        set_hbar(old)


def resolve(nu: float | None) -> float:
    return _HBAR if nu is None else float(nu)

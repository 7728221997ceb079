"""Memristor device law, window functions and the memristive fuse.

The state variable is the normalized dopant-boundary position ``x = w / D``.
``x = 1`` is the fully doped, low-resistive state (``r_on``) and ``x = 0`` the
undoped, high-resistive state (``r_off``).

All array-level helpers broadcast over numpy arrays so the grid solver can
advance every device in one call; the object-level functions
(:func:`memristance`, :func:`state_derivative`, :func:`fuse_step`, ...) wrap
them for single devices.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Union

import numpy as np


@dataclass(frozen=True)
class Rectangular:
    """Unit window with hard suppression at the boundary being driven into."""

    def __call__(self, x, i):
        x = np.asarray(x, dtype=float)
        i = np.asarray(i, dtype=float)
        stuck = ((x >= 1.0) & (i > 0)) | ((x <= 0.0) & (i < 0))
        return np.where(stuck, 0.0, 1.0)


@dataclass(frozen=True)
class Biolek:
    """Biolek window ``1 - (x - stp(-i))**(2p)``."""

    p: int = 2

    def __post_init__(self):
        if int(self.p) != self.p or self.p < 1:
            raise ValueError(f"Biolek exponent must be a positive integer, got {self.p}")

    def __call__(self, x, i):
        x = np.asarray(x, dtype=float)
        stp = (-np.asarray(i, dtype=float) >= 0).astype(float)
        sq = (x - stp) ** 2
        out = sq
        for _ in range(int(self.p) - 1):
            out = out * sq
        return 1.0 - out


@dataclass(frozen=True)
class Prodromakis:
    """Prodromakis window ``j * (1 - ((x - 0.5)**2 + 0.75)**p)``.

    Independent of the current direction; peaks at ``x = 0.5`` with value
    ``j * (1 - 0.75**p)``.
    """

    p: float = 1.0
    j: float = 1.0

    def __post_init__(self):
        if self.p <= 0 or self.j <= 0:
            raise ValueError(f"Prodromakis p and j must be positive, got p={self.p}, j={self.j}")

    def __call__(self, x, i):
        x = np.asarray(x, dtype=float)
        out = self.j * (1.0 - ((x - 0.5) ** 2 + 0.75) ** self.p)
        return out * np.ones_like(np.asarray(i, dtype=float))


Window = Union[Rectangular, Biolek, Prodromakis]


def window_from_name(name: str, p: float | None = None, j: float | None = None) -> Window:
    """Build a window from its lowercase name (``rectangular``, ``biolek``, ``prodromakis``)."""
    name = name.strip().lower()
    if name == "rectangular":
        return Rectangular()
    if name == "biolek":
        return Biolek(p=int(p) if p is not None else 2)
    if name == "prodromakis":
        return Prodromakis(p=float(p) if p is not None else 1.0, j=float(j) if j is not None else 1.0)
    raise ValueError(f"unknown window function {name!r}")


def window_to_fields(window: Window) -> dict:
    if isinstance(window, Rectangular):
        return {"window": "rectangular"}
    if isinstance(window, Biolek):
        return {"window": "biolek", "window_p": window.p}
    return {"window": "prodromakis", "window_p": window.p, "window_j": window.j}


@dataclass(frozen=True)
class MemristorParams:
    """Device constants of a linear-drift (HP) memristor.

    Parameters
    ----------
    r_on, r_off : float
        Fully doped and undoped resistance in ohms, ``0 < r_on < r_off``.
    d : float
        Active-region thickness in meters.
    mu_v : float
        Dopant mobility in m^2 V^-1 s^-1.
    window : Rectangular | Biolek | Prodromakis
        Window function applied to the drift.
    """

    r_on: float = 100.0
    r_off: float = 16e3
    d: float = 1e-8
    mu_v: float = 1e-14
    window: Window = field(default_factory=lambda: Biolek(p=2))

    def __post_init__(self):
        if not 0 < self.r_on < self.r_off:
            raise ValueError(f"need 0 < r_on < r_off, got r_on={self.r_on}, r_off={self.r_off}")
        if self.d <= 0 or self.mu_v <= 0:
            raise ValueError("d and mu_v must be positive")

    @property
    def drift_constant(self) -> float:
        """``mu_v * r_on / d**2`` in s^-1 A^-1."""
        return self.mu_v * self.r_on / self.d**2


@dataclass(frozen=True)
class MemristorState:
    x: float
    polarity: int = 1

    def __post_init__(self):
        if not 0.0 <= self.x <= 1.0:
            raise ValueError(f"state x must lie in [0, 1], got {self.x}")
        if self.polarity not in (1, -1):
            raise ValueError(f"polarity must be +1 or -1, got {self.polarity}")


@dataclass(frozen=True)
class FuseState:
    """Two memristors of opposing polarity in series.

    ``a`` carries polarity +1 and ``b`` polarity -1.  Each half has its own
    params so fault injection can perturb them independently.
    """

    a: MemristorState
    b: MemristorState
    params_a: MemristorParams
    params_b: MemristorParams

    @classmethod
    def symmetric(cls, params: MemristorParams, x: float) -> "FuseState":
        return cls(MemristorState(x, 1), MemristorState(x, -1), params, params)


# -- array-level device law -------------------------------------------------

def memristance_of(x, r_on, r_off):
    """``r_on * x + r_off * (1 - x)``, broadcasting."""
    return r_on * x + r_off * (1.0 - x)


def state_for_memristance(m, r_on, r_off):
    """Invert the device law: the state ``x`` giving memristance ``m``."""
    return (r_off - m) / (r_off - r_on)


def drift_rate(x, i, polarity, r_on, mu_v, d, window: Window):
    """dx/dt for devices at state ``x`` carrying branch current ``i``."""
    signed = polarity * np.asarray(i, dtype=float)
    k = mu_v * r_on / d**2
    return polarity * k * np.asarray(i, dtype=float) * window(x, signed)


def advance_states(x, i, polarity, r_on, mu_v, d, window: Window, dt):
    """One explicit Euler step followed by clamping into [0, 1]."""
    return np.clip(x + dt * drift_rate(x, i, polarity, r_on, mu_v, d, window), 0.0, 1.0)


# -- single-device operations -------------------------------------------------

def memristance(params: MemristorParams, state: MemristorState) -> float:
    return float(memristance_of(state.x, params.r_on, params.r_off))


def window_value(params: MemristorParams, x: float, i: float) -> float:
    return float(params.window(x, i))


def state_derivative(params: MemristorParams, state: MemristorState, i: float) -> float:
    """Rate of change of the normalized state, in s^-1."""
    return float(drift_rate(state.x, i, state.polarity, params.r_on, params.mu_v, params.d, params.window))


def fuse_memristance(fuse: FuseState) -> float:
    return memristance(fuse.params_a, fuse.a) + memristance(fuse.params_b, fuse.b)


def fuse_step(fuse: FuseState, i: float, dt: float) -> FuseState:
    """Advance both halves of a fuse by ``dt`` with the same series current ``i``."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    new = []
    for state, params in ((fuse.a, fuse.params_a), (fuse.b, fuse.params_b)):
        x = advance_states(state.x, i, state.polarity, params.r_on, params.mu_v, params.d, params.window, dt)
        new.append(replace(state, x=float(x)))
    return replace(fuse, a=new[0], b=new[1])

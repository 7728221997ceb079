"""Transient simulation of a memristive grid.

Each time step freezes the memristances, solves the reduced nodal system
``G v = b`` for the node voltages, and then advances every device state with
the resulting branch currents.  The state dynamics (seconds) are slow compared
with the settling of the resistive network, so the split is accurate as long
as a step does not move any state by more than ``max_dx_per_step``; larger
moves are redone in sub-steps with the voltages held fixed.
"""
from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .device import advance_states, drift_rate, memristance_of
from .grid import FUSE_POLARITY, OUTPUT_POLARITY, Grid


# Systems up to this many nodes are solved by sparse LU instead of CG.
DIRECT_SOLVE_MAX = 400


class NumericalDomainError(ValueError):
    """A branch resistance is not finite and positive."""


class SolverError(RuntimeError):
    def __init__(self, message, residual):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True)
class SimConfig:
    dt: float = 0.01
    t_end: float = 30.0
    max_dx_per_step: float = 0.01
    linear_tol: float = 1e-10
    record_every: float = 1.0

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.t_end < 0:
            raise ValueError("t_end must be nonnegative")
        if not 0 < self.max_dx_per_step < 1:
            raise ValueError("max_dx_per_step must lie in (0, 1)")
        if self.linear_tol <= 0:
            raise ValueError("linear_tol must be positive")
        if self.record_every <= 0:
            raise ValueError("record_every must be positive")


@dataclass
class TraceSet:
    times: list = field(default_factory=list)
    node_voltages: list = field(default_factory=list)
    fuse_memristances: list = field(default_factory=list)
    output_memristances: list = field(default_factory=list)

    def record(self, t: float, grid: Grid, v: np.ndarray) -> None:
        self.times.append(float(t))
        self.node_voltages.append(np.array(v, dtype=float))
        self.fuse_memristances.append(grid.fuse_memristances())
        self.output_memristances.append(grid.output_memristances())

    def __len__(self):
        return len(self.times)

    def arrays(self) -> dict[str, np.ndarray]:
        return {
            "node_voltages": np.array(self.node_voltages),
            "fuse_memristances": np.array(self.fuse_memristances),
            "output_memristances": np.array(self.output_memristances),
        }

    def to_csv(self, directory, prefix: str = "") -> list[str]:
        """Write one CSV per quantity: a ``time`` column then one column per node or fuse."""
        os.makedirs(directory, exist_ok=True)
        paths = []
        for name, data in self.arrays().items():
            label = "fuse" if name.startswith("fuse") else "node"
            path = os.path.join(directory, f"{prefix}{name}.csv")
            with open(path, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["time"] + [f"{label}{k}" for k in range(data.shape[1])])
                for t, row in zip(self.times, data):
                    w.writerow([repr(t)] + [repr(float(val)) for val in row])
            paths.append(path)
        return paths


# -- nodal analysis -----------------------------------------------------------

def branch_conductances(grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """Conductances of every fuse and of every output branch (memristor + load)."""
    m_fuse = grid.fuse_memristances()
    r_out = grid.output_memristances() + grid.output_load
    if not (np.all(np.isfinite(m_fuse)) and np.all(m_fuse > 0)):
        raise NumericalDomainError("fuse memristance must be finite and positive")
    if not (np.all(np.isfinite(r_out)) and np.all(r_out > 0)):
        raise NumericalDomainError("output branch resistance must be finite and positive")
    return 1.0 / m_fuse, 1.0 / r_out


class _Assembler:
    """Reuses the sparsity pattern of a grid's conductance matrix across steps."""

    def __init__(self, edges: np.ndarray, n: int):
        nf = len(edges)
        rows = np.concatenate([edges[:, 0], edges[:, 1], np.arange(n)])
        cols = np.concatenate([edges[:, 1], edges[:, 0], np.arange(n)])
        # Tag every entry with its position so the CSR data order can be recovered.
        tags = sp.csr_matrix((np.arange(1, 2 * nf + n + 1, dtype=float), (rows, cols)), shape=(n, n))
        tags.sort_indices()
        self.indptr = tags.indptr
        self.indices = tags.indices
        self.order = tags.data.astype(np.int64) - 1
        self.edges = edges
        self.n = n

    def matrix(self, g_fuse: np.ndarray, diag: np.ndarray) -> sp.csr_matrix:
        values = np.concatenate([-g_fuse, -g_fuse, diag])
        return sp.csr_matrix((values[self.order], self.indices, self.indptr), shape=(self.n, self.n))

    def system(self, grid: Grid):
        g_fuse, g_out = branch_conductances(grid)
        e = self.edges
        diag = (
            1.0 / grid.series_r
            + g_out
            + np.bincount(e[:, 0], g_fuse, self.n)
            + np.bincount(e[:, 1], g_fuse, self.n)
        )
        b = grid.bias / grid.series_r + g_out * grid.output_termination_voltage()
        return self.matrix(g_fuse, diag), b


def assemble_system(grid: Grid) -> tuple[sp.csr_matrix, np.ndarray]:
    """Reduced nodal system ``(G, b)`` with ground eliminated.

    ``G`` is symmetric positive definite: every node reaches ground through
    its series resistor.
    """
    if np.any(grid.series_r <= 0):
        raise NumericalDomainError("series resistance must be positive")
    return _Assembler(grid.edges, grid.n_nodes).system(grid)


def _pcg(G, b, x, inv_diag, limit, maxiter):
    """Jacobi-preconditioned conjugate gradients stopped on the inf-norm residual."""
    r = b - G @ x
    z = inv_diag * r
    p = z.copy()
    rz = r @ z
    for _ in range(maxiter):
        if np.max(np.abs(r)) <= limit:
            break
        q = G @ p
        alpha = rz / (p @ q)
        x += alpha * p
        r -= alpha * q
        z = inv_diag * r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    return x, np.max(np.abs(r))


def solve_voltages(system, linear_tol: float = 1e-10, x0: np.ndarray | None = None) -> np.ndarray:
    """Solve ``G v = b`` to ``||G v - b||_inf <= linear_tol * ||b||_inf``.

    Small systems are factorized directly.  Larger ones use
    Jacobi-preconditioned conjugate gradients, warm-started from ``x0`` when
    given, with a sparse direct solve as fallback if CG stalls.
    """
    G, b = system
    b = np.asarray(b, dtype=float)
    b_norm = np.max(np.abs(b)) if b.size else 0.0
    if b_norm == 0.0:
        return np.zeros_like(b)
    limit = linear_tol * b_norm
    if len(b) <= DIRECT_SOLVE_MAX:
        v = spla.spsolve(G.tocsc(), b)
        residual = np.max(np.abs(G @ v - b))
    else:
        inv_diag = 1.0 / G.diagonal()
        x = inv_diag * b if x0 is None else np.array(x0, dtype=float)
        v, _ = _pcg(G, b, x, inv_diag, limit, maxiter=2 * len(b))
        residual = np.max(np.abs(G @ v - b))
    if residual > limit:
        v = spla.spsolve(G.tocsc(), b)
        residual = np.max(np.abs(G @ v - b))
        if not residual <= limit:
            raise SolverError("linear solve did not reach tolerance", residual)
    return v


def branch_currents(grid: Grid, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Fuse currents (first node to second) and output currents (node to termination)."""
    e = grid.edges
    i_fuse = (v[e[:, 0]] - v[e[:, 1]]) / grid.fuse_memristances()
    i_out = (v - grid.output_termination_voltage()) / (grid.output_memristances() + grid.output_load)
    return i_fuse, i_out


# -- time stepping ------------------------------------------------------------

def _fuse_rates(grid: Grid, fuse_x, i_fuse):
    p = grid.params
    return drift_rate(fuse_x, i_fuse[:, None], FUSE_POLARITY, grid.fuse_r_on, p.mu_v, p.d, p.window)


def _out_rates(grid: Grid, out_x, i_out):
    p = grid.params
    return drift_rate(out_x, i_out, OUTPUT_POLARITY, grid.out_r_on, p.mu_v, p.d, p.window)


def advance(grid: Grid, v: np.ndarray, dt: float, max_dx: float) -> Grid:
    """Advance all device states by ``dt`` with node voltages ``v`` held fixed."""
    p = grid.params
    i_fuse, i_out = branch_currents(grid, v)
    fuse_x = advance_states(grid.fuse_x, i_fuse[:, None], FUSE_POLARITY, grid.fuse_r_on, p.mu_v, p.d, p.window, dt)
    out_x = advance_states(grid.out_x, i_out, OUTPUT_POLARITY, grid.out_r_on, p.mu_v, p.d, p.window, dt)
    largest = max(
        np.max(np.abs(fuse_x - grid.fuse_x), initial=0.0),
        np.max(np.abs(out_x - grid.out_x), initial=0.0),
    )
    if largest <= max_dx:
        return replace(grid, fuse_x=fuse_x, out_x=out_x)

    n_sub = math.ceil(largest / max_dx)
    h = dt / n_sub
    fuse_x, out_x = grid.fuse_x, grid.out_x
    e = grid.edges
    v_term = grid.output_termination_voltage()
    dv = v[e[:, 0]] - v[e[:, 1]]
    for _ in range(n_sub):
        m_fuse = memristance_of(fuse_x, grid.fuse_r_on, grid.fuse_r_off).sum(axis=1)
        m_out = memristance_of(out_x, grid.out_r_on, grid.out_r_off)
        fuse_x = np.clip(fuse_x + h * _fuse_rates(grid, fuse_x, dv / m_fuse), 0.0, 1.0)
        out_x = np.clip(out_x + h * _out_rates(grid, out_x, (v - v_term) / (m_out + grid.output_load)), 0.0, 1.0)
    return replace(grid, fuse_x=fuse_x, out_x=out_x)


def step(grid: Grid, config: SimConfig, v_guess: np.ndarray | None = None) -> tuple[Grid, np.ndarray]:
    """One freeze-solve-integrate cycle.

    Returns the advanced grid and the node voltages that drove the update.
    """
    v = solve_voltages(assemble_system(grid), config.linear_tol, v_guess)
    return advance(grid, v, config.dt, config.max_dx_per_step), v


def run(grid: Grid, config: SimConfig, on_record=None) -> tuple[TraceSet, Grid]:
    """Integrate from t = 0 to ``config.t_end``.

    Traces are recorded at t = 0, every ``record_every`` seconds and at the
    final instant; every recorded voltage vector is the exact nodal solution
    for the device states recorded alongside it.  ``on_record(t, grid, v)``
    is called at each recorded instant when given.
    """
    assembler = _Assembler(grid.edges, grid.n_nodes)
    traces = TraceSet()
    n_steps = math.ceil(config.t_end / config.dt - 1e-9) if config.t_end > 0 else 0
    next_record = 0.0
    v = None
    t = 0.0
    for k in range(n_steps + 1):
        t = min(k * config.dt, config.t_end)
        v = solve_voltages(assembler.system(grid), config.linear_tol, v)
        if k == n_steps or t >= next_record - 1e-9 * config.dt:
            traces.record(t, grid, v)
            if on_record is not None:
                on_record(t, grid, v)
            while next_record <= t + 1e-9 * config.dt:
                next_record += config.record_every
        if k == n_steps:
            break
        h = min(config.dt, config.t_end - t)
        grid = advance(grid, v, h, config.max_dx_per_step)
    return traces, grid


def source_power(grid: Grid, v: np.ndarray) -> float:
    """Total power delivered by the bias sources, in watts."""
    p = grid.bias * (grid.bias - v) / grid.series_r
    if grid.output_termination == "source":
        _, i_out = branch_currents(grid, v)
        p = p - grid.bias * i_out
    return float(np.sum(p))

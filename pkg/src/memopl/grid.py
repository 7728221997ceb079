"""Hexagonal and rectangular memristive grids.

One node per image pixel.  Hexagonal grids use "odd-r" offset coordinates:
odd rows are shifted half a cell to the right, so every interior node has six
neighbors.  Each node carries

* a bias source ``bias[n]`` behind a series resistor ``series_r[n]``,
* an output memristor (the bipolar-cell dendrite) in series with
  ``output_load`` ohms, returning either to the node's own bias source
  (``output_termination="source"``) or to ground (``"ground"``),
* memristive fuses to each neighbor.

Device arrays are stored flat so the solver can update them in bulk.  Fuse
``f`` joins ``edges[f, 0]`` to ``edges[f, 1]``; ``fuse_x[f, 0]`` is the
polarity +1 half and ``fuse_x[f, 1]`` the polarity -1 half.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .device import FuseState, MemristorParams, MemristorState, memristance_of, state_for_memristance

HEXAGONAL = "hexagonal"
RECTANGULAR = "rectangular"

# Positive output current (node -> termination) drives the device toward r_off.
OUTPUT_POLARITY = -1
FUSE_POLARITY = np.array([1, -1])

_HEX_EVEN = ((0, -1), (0, 1), (-1, -1), (-1, 0), (1, -1), (1, 0))
_HEX_ODD = ((0, -1), (0, 1), (-1, 0), (-1, 1), (1, 0), (1, 1))
_RECT = ((0, -1), (0, 1), (-1, 0), (1, 0))


class NodeId(NamedTuple):
    row: int
    col: int


@dataclass(frozen=True)
class Topology:
    kind: str
    width: int
    height: int

    def __post_init__(self):
        if self.kind not in (HEXAGONAL, RECTANGULAR):
            raise ValueError(f"unknown topology kind {self.kind!r}")
        if self.width < 2 or self.height < 2:
            raise ValueError(f"grid must be at least 2x2, got {self.width}x{self.height}")

    @property
    def n_nodes(self) -> int:
        return self.width * self.height

    @property
    def shape(self) -> tuple[int, int]:
        return (self.height, self.width)

    def index(self, n: NodeId) -> int:
        return n[0] * self.width + n[1]

    def node(self, index: int) -> NodeId:
        return NodeId(*divmod(int(index), self.width))


def neighbors(topology: Topology, n) -> list[NodeId]:
    """Neighbors of ``n`` in a fixed order, clipped to the raster.

    Hexagonal order: left, right, the two cells of the row above, the two
    cells of the row below (leftmost first).  Rectangular order: left, right,
    up, down.
    """
    r, c = n
    if not (0 <= r < topology.height and 0 <= c < topology.width):
        raise IndexError(f"node {tuple(n)} outside {topology.height}x{topology.width} grid")
    if topology.kind == HEXAGONAL:
        offsets = _HEX_ODD if r % 2 else _HEX_EVEN
    else:
        offsets = _RECT
    return [
        NodeId(r + dr, c + dc)
        for dr, dc in offsets
        if 0 <= r + dr < topology.height and 0 <= c + dc < topology.width
    ]


def grid_distance(topology: Topology, a, b) -> int:
    """Number of fuse hops between two nodes on an unbounded grid of the same kind."""
    if topology.kind == RECTANGULAR:
        return abs(a[0] - b[0]) + abs(a[1] - b[1])

    def cube(n):
        q = n[1] - (n[0] - (n[0] & 1)) // 2
        return q, n[0]

    qa, ra = cube(a)
    qb, rb = cube(b)
    dq, dr = qa - qb, ra - rb
    return max(abs(dq), abs(dr), abs(dq + dr))


def edge_list(topology: Topology) -> np.ndarray:
    """Unordered node pairs ``(n, m)`` with ``n < m``, row-major by ``n``."""
    edges = []
    for idx in range(topology.n_nodes):
        for m in neighbors(topology, topology.node(idx)):
            j = topology.index(m)
            if j > idx:
                edges.append((idx, j))
    return np.array(edges, dtype=np.int64).reshape(-1, 2)


@dataclass(frozen=True)
class Grid:
    topology: Topology
    params: MemristorParams
    m_init: float
    edges: np.ndarray
    fuse_x: np.ndarray
    fuse_r_on: np.ndarray
    fuse_r_off: np.ndarray
    out_x: np.ndarray
    out_r_on: np.ndarray
    out_r_off: np.ndarray
    series_r: np.ndarray
    bias: np.ndarray
    output_load: float = 1e6
    output_termination: str = "source"

    @property
    def n_nodes(self) -> int:
        return self.topology.n_nodes

    @property
    def n_fuses(self) -> int:
        return len(self.edges)

    @property
    def n_devices(self) -> int:
        """Individual memristors: two per fuse plus one output device per node."""
        return 2 * self.n_fuses + self.n_nodes

    def fuse_memristances(self) -> np.ndarray:
        return memristance_of(self.fuse_x, self.fuse_r_on, self.fuse_r_off).sum(axis=1)

    def output_memristances(self) -> np.ndarray:
        return memristance_of(self.out_x, self.out_r_on, self.out_r_off)

    def output_termination_voltage(self) -> np.ndarray:
        if self.output_termination == "source":
            return self.bias
        return np.zeros(self.n_nodes)

    def degree(self) -> np.ndarray:
        n = self.n_nodes
        return np.bincount(self.edges[:, 0], minlength=n) + np.bincount(self.edges[:, 1], minlength=n)

    def device_params(self, r_on: float, r_off: float) -> MemristorParams:
        return replace(self.params, r_on=float(r_on), r_off=float(r_off))

    @property
    def fuses(self) -> list[tuple[NodeId, NodeId, FuseState]]:
        out = []
        topo = self.topology
        for f, (n, m) in enumerate(self.edges):
            fuse = FuseState(
                MemristorState(float(self.fuse_x[f, 0]), 1),
                MemristorState(float(self.fuse_x[f, 1]), -1),
                self.device_params(self.fuse_r_on[f, 0], self.fuse_r_off[f, 0]),
                self.device_params(self.fuse_r_on[f, 1], self.fuse_r_off[f, 1]),
            )
            out.append((topo.node(n), topo.node(m), fuse))
        return out

    @property
    def output_devices(self) -> list[tuple[MemristorState, MemristorParams]]:
        return [
            (MemristorState(float(self.out_x[n]), OUTPUT_POLARITY), self.device_params(self.out_r_on[n], self.out_r_off[n]))
            for n in range(self.n_nodes)
        ]

    def copy(self, **changes) -> "Grid":
        arrays = {
            name: getattr(self, name).copy()
            for name in ("fuse_x", "fuse_r_on", "fuse_r_off", "out_x", "out_r_on", "out_r_off", "series_r", "bias")
        }
        arrays.update(changes)
        return replace(self, **arrays)


def build_grid(
    topology: Topology,
    device_defaults: MemristorParams | None = None,
    m_init: float = 200.0,
    series_r: float = 1e3,
    output_load: float = 1e6,
    output_termination: str = "source",
) -> Grid:
    """Build a grid with every device initialised at memristance ``m_init``."""
    params = device_defaults or MemristorParams()
    if not params.r_on <= m_init <= params.r_off:
        raise ValueError(f"m_init={m_init} outside device range [{params.r_on}, {params.r_off}]")
    if series_r <= 0:
        raise ValueError("series_r must be positive")
    if output_load < 0:
        raise ValueError("output_load must be nonnegative")
    if output_termination not in ("source", "ground"):
        raise ValueError(f"unknown output termination {output_termination!r}")
    edges = edge_list(topology)
    n, nf = topology.n_nodes, len(edges)
    x0 = state_for_memristance(m_init, params.r_on, params.r_off)
    return Grid(
        topology=topology,
        params=params,
        m_init=float(m_init),
        edges=edges,
        fuse_x=np.full((nf, 2), float(x0)),
        fuse_r_on=np.full((nf, 2), float(params.r_on)),
        fuse_r_off=np.full((nf, 2), float(params.r_off)),
        out_x=np.full(n, float(x0)),
        out_r_on=np.full(n, float(params.r_on)),
        out_r_off=np.full(n, float(params.r_off)),
        series_r=np.full(n, float(series_r)),
        bias=np.zeros(n),
        output_load=float(output_load),
        output_termination=output_termination,
    )


def set_bias(grid: Grid, volts) -> Grid:
    """Replace the node bias voltages; device states are carried over."""
    volts = np.asarray(volts, dtype=float)
    if volts.size != grid.n_nodes:
        raise ValueError(f"bias has {volts.size} entries, grid has {grid.n_nodes} nodes")
    return replace(grid, bias=volts.reshape(-1).copy())


# -- fault injection ----------------------------------------------------------

@dataclass(frozen=True)
class FaultSpec:
    fraction_affected: float
    r_on_range: tuple[float, float] = (0.5, 4.0)
    r_off_range: tuple[float, float] = (0.625, 1.25)
    m_init_range: tuple[float, float] = (0.5, 40.0)
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.fraction_affected <= 1.0:
            raise ValueError(f"fraction_affected must be in [0, 1], got {self.fraction_affected}")
        for name in ("r_on_range", "r_off_range", "m_init_range"):
            lo, hi = getattr(self, name)
            if not 0 < lo <= hi:
                raise ValueError(f"{name} must satisfy 0 < lo <= hi, got {(lo, hi)}")


FUSE_A, FUSE_B, OUTPUT = "fuse_a", "fuse_b", "output"


@dataclass
class FaultMap:
    """Devices touched by :func:`inject_faults` and the multipliers they drew.

    Device ids enumerate fuse halves first (``2*f`` for half a, ``2*f + 1``
    for half b) followed by output devices (``2*n_fuses + node``).
    """

    device_id: np.ndarray
    kind: list
    location: np.ndarray
    r_on_mult: np.ndarray
    r_off_mult: np.ndarray
    m_init_mult: np.ndarray

    def __len__(self):
        return len(self.device_id)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["device_id", "kind", "location", "r_on_mult", "r_off_mult", "m_init_mult"])
            for row in zip(self.device_id, self.kind, self.location, self.r_on_mult, self.r_off_mult, self.m_init_mult):
                w.writerow([int(row[0]), row[1], int(row[2]), f"{row[3]:.12g}", f"{row[4]:.12g}", f"{row[5]:.12g}"])

    def node_levels(self, grid: Grid, m_init_range=(0.5, 40.0)) -> np.ndarray:
        """Per-node 16-level map of perturbed initial states.

        Level 7 marks nodes with no affected device.  Otherwise the most
        extreme ``m_init`` multiplier touching the node is placed on a log
        scale: levels 0-6 for multipliers below 1, 8-15 above 1.  Fuse half a
        is drawn at the fuse's first node and half b at its second.
        """
        worst = np.zeros(grid.n_nodes)
        for kind, loc, mult in zip(self.kind, self.location, self.m_init_mult):
            node = loc if kind == OUTPUT else grid.edges[loc, 0 if kind == FUSE_A else 1]
            v = np.log(mult)
            if abs(v) > abs(worst[node]):
                worst[node] = v
        levels = np.full(grid.n_nodes, 7, dtype=np.int64)
        lo, hi = np.log(m_init_range[0]), np.log(m_init_range[1])
        neg, pos = worst < 0, worst > 0
        if lo < 0:
            levels[neg] = np.clip(np.round(6 * (1 - worst[neg] / lo)), 0, 6)
        if hi > 0:
            levels[pos] = np.clip(np.round(8 + 7 * worst[pos] / hi), 8, 15)
        return levels.reshape(grid.topology.shape)


def inject_faults(grid: Grid, spec: FaultSpec) -> tuple[Grid, FaultMap]:
    """Perturb a random subset of individual memristors.

    Each affected device gets independent uniform multipliers on r_on, r_off
    and its initial memristance; its state is recomputed from the perturbed
    initial memristance (clamped into the perturbed range).
    """
    nf, n = grid.n_fuses, grid.n_nodes
    n_dev = 2 * nf + n
    count = int(round(spec.fraction_affected * n_dev))
    rng = np.random.default_rng(spec.seed)
    ids = np.sort(rng.choice(n_dev, size=count, replace=False)) if count else np.array([], dtype=np.int64)
    r_on_mult = rng.uniform(*spec.r_on_range, size=count)
    r_off_mult = rng.uniform(*spec.r_off_range, size=count)
    m_init_mult = rng.uniform(*spec.m_init_range, size=count)

    out = grid.copy()
    r_on = np.concatenate([out.fuse_r_on.reshape(-1), out.out_r_on])
    r_off = np.concatenate([out.fuse_r_off.reshape(-1), out.out_r_off])
    x = np.concatenate([out.fuse_x.reshape(-1), out.out_x])

    r_on[ids] *= r_on_mult
    r_off[ids] *= r_off_mult
    if np.any(r_on[ids] >= r_off[ids]):
        raise ValueError("fault multipliers produced r_on >= r_off for some device")
    m0 = np.clip(grid.m_init * m_init_mult, r_on[ids], r_off[ids])
    x[ids] = state_for_memristance(m0, r_on[ids], r_off[ids])

    split = 2 * nf
    out = replace(
        out,
        fuse_r_on=r_on[:split].reshape(nf, 2),
        fuse_r_off=r_off[:split].reshape(nf, 2),
        fuse_x=x[:split].reshape(nf, 2),
        out_r_on=r_on[split:],
        out_r_off=r_off[split:],
        out_x=x[split:],
    )
    kinds = [OUTPUT if d >= split else (FUSE_A if d % 2 == 0 else FUSE_B) for d in ids]
    location = np.where(ids >= split, ids - split, ids // 2)
    return out, FaultMap(ids, kinds, location, r_on_mult, r_off_mult, m_init_mult)

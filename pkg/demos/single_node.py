"""One lit pixel on a dark 5x5 hexagonal grid.

Only the centre source is biased (30 mV); every other source is grounded.
The six fuses around the centre carry almost all of the current, so their
memristance climbs towards the off state and the centre is progressively
isolated.  Watch the centre voltage rise while its neighbors fall.
"""
import numpy as np

from memopl.config import default_config
from memopl.experiments import fuse_classes, make_grid, sim_config
from memopl.grid import grid_distance, set_bias
from memopl.solver import run

cfg = default_config("single-node")
grid = make_grid(cfg, (5, 5))
center = grid.topology.index((2, 2))
bias = np.zeros(grid.n_nodes)
bias[center] = 0.03
grid = set_bias(grid, bias)

traces, final = run(grid, sim_config(cfg, record_every=5.0))

topo = grid.topology
ring = np.array([grid_distance(topo, topo.node(center), topo.node(n)) for n in range(grid.n_nodes)])
labels = np.array(fuse_classes(grid, center))

print(" time   centre  ring-1  ring-2   (mV)   centre fuses (kOhm)")
for t, v, m in zip(traces.times, traces.node_voltages, traces.fuse_memristances):
    print(f"{t:5.1f}  {1e3 * v[center]:7.3f} {1e3 * v[ring == 1].mean():7.3f} {1e3 * v[ring == 2].mean():7.3f}"
          f"          {m[labels == 'd0-1'].mean() / 1e3:6.2f}")

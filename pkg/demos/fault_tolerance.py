"""Edge detection with half of the memristors out of spec.

Faulty devices get random on/off resistances and initial states.  Every
hexagonal node has six fuses, a rectangular one only four, so a hexagonal
grid keeps more healthy paths around each bad device.  The IoU against the
fault-free edge map makes the difference visible.
"""
from memopl.config import default_config
from memopl.experiments import cmd_fault

cfg = default_config("fault").replace(fault={"yields": [1.0, 0.5], "seeds": 2})
result = cmd_fault(cfg, "demo_out/fault")
for topo, y, seed, iou, mismatch in result["rows"]:
    print(f"{topo:12s} yield {y:.0%} seed {seed}: edge IoU {iou:.3f}, smoothing mismatch {mismatch:.4f}")

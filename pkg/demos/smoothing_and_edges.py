"""Smooth a cartoon and find the edges of a cube.

The grid starts with every fuse in its low-resistance state, so it first
acts as a plain resistive blur.  Fuses that straddle a strong contrast carry
the most current and switch off, which cuts the blur at exactly those
places.  Their memristance is then an edge map.

Outputs go to ``demo_out/`` as PGM/PBM files any image viewer can open.
"""
import os

from memopl.config import default_config
from memopl.experiments import cmd_edges, cmd_smooth

out = "demo_out"
os.makedirs(out, exist_ok=True)

smooth = cmd_smooth(default_config("smooth").replace(run={"frames": False}), os.path.join(out, "smooth"))
print(f"clean input vs its smoothed version: {smooth['input_vs_smoothed']:.3f}")
print(f"noisy vs clean input:                {smooth['input_noise_mismatch']:.3f}")
print(f"noisy vs clean after smoothing:      {smooth['smoothed_mismatch']:.3f}")

# Fuse-majority read-out: a pixel is an edge when three of its fuses exceed 3 kOhm.
edges = cmd_edges(default_config("edges"), os.path.join(out, "edges"))
print(f"edge pixels: {edges['edge_pixels']}; overlap with Prewitt {edges['iou_prewitt']:.2f}, "
      f"Sobel {edges['iou_sobel']:.2f}")

# The output-memristor read-out flags pixels pulled away from their own input.
band = default_config("edges").replace(
    image={"source": "cartoon"}, threshold={"scheme": "output_band", "band_lo": 600.0, "band_hi": 2000.0}
)
band_edges = cmd_edges(band, os.path.join(out, "edges_band"))
print(f"output-band edge pixels on the cartoon: {band_edges['edge_pixels']}")

"""Simulation of a memristive outer-plexiform-layer grid for image smoothing and edge detection."""
from .config import CALIBRATED_MU_V, ExperimentConfig, default_config, load_config
from .device import Biolek, MemristorParams, Prodromakis, Rectangular
from .grid import FaultSpec, Topology, build_grid, inject_faults, set_bias
from .solver import SimConfig, run

__all__ = [
    "CALIBRATED_MU_V", "ExperimentConfig", "default_config", "load_config",
    "Biolek", "MemristorParams", "Prodromakis", "Rectangular",
    "FaultSpec", "Topology", "build_grid", "inject_faults", "set_bias",
    "SimConfig", "run",
]

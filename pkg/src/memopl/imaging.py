"""Image transcription, edge read-out and comparison metrics.

Gray images are integer arrays of shape ``(height, width)`` on a 16-level
scale where 0 is the brightest pixel and 15 is dark.  Dark pixels map to the
largest bias voltage.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .device import memristance_of
from .grid import Grid

N_LEVELS = 16
MAX_LEVEL = N_LEVELS - 1


@dataclass(frozen=True)
class OutputBand:
    """Flag a pixel when its output memristance lies in ``[lo, hi]``."""

    lo: float = 600.0
    hi: float = 2000.0

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"band needs lo < hi, got [{self.lo}, {self.hi}]")


@dataclass(frozen=True)
class FuseMajority:
    """Flag a pixel when at least ``min_count`` incident fuses exceed ``m_t``.

    ``per_half`` compares each fuse's larger half instead of the series total.
    """

    m_t: float = 1600.0
    min_count: int = 3
    per_half: bool = False

    def __post_init__(self):
        if self.min_count < 1:
            raise ValueError("min_count must be at least 1")


def check_image(img) -> np.ndarray:
    img = np.asarray(img)
    if img.ndim != 2:
        raise ValueError("gray image must be 2-D")
    if not np.issubdtype(img.dtype, np.integer):
        if not np.all(img == np.round(img)):
            raise ValueError("gray levels must be integers")
        img = img.astype(np.int64)
    if img.size and (img.min() < 0 or img.max() > MAX_LEVEL):
        raise ValueError(f"gray levels must lie in [0, {MAX_LEVEL}]")
    return img


def _round_half_away(x):
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def transcribe_to_bias(img, v_max: float = 0.03) -> np.ndarray:
    """Per-node bias voltages, row-major: ``v_max * level / 15``."""
    if v_max <= 0:
        raise ValueError("v_max must be positive")
    img = check_image(img)
    return (v_max * img / MAX_LEVEL).reshape(-1).astype(float)


def read_smoothed(voltages, v_max: float = 0.03, shape=None) -> np.ndarray:
    """Map node voltages back to the nearest gray level."""
    v = np.asarray(voltages, dtype=float)
    if not np.all(np.isfinite(v)):
        raise ValueError("voltages must be finite")
    levels = np.clip(_round_half_away(v * MAX_LEVEL / v_max), 0, MAX_LEVEL).astype(np.int64)
    return levels.reshape(shape) if shape is not None else levels


def gaussian_noise_levels(shape, mu: float = 0.0, sigma: float = 0.3, seed=0) -> np.ndarray:
    """Integer level offsets ``round(15 * N(mu, sigma))``, before any clamping."""
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    rng = np.random.default_rng(seed)
    return _round_half_away(MAX_LEVEL * rng.normal(mu, sigma, size=shape)).astype(np.int64)


def add_gaussian_noise(img, mu: float = 0.0, sigma: float = 0.3, seed=0) -> np.ndarray:
    """Additive white Gaussian noise; ``mu`` and ``sigma`` are on the [0, 1] intensity scale."""
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    img = check_image(img)
    if sigma == 0 and mu == 0:
        return img.copy()
    return np.clip(img + gaussian_noise_levels(img.shape, mu, sigma, seed), 0, MAX_LEVEL)


def brighten(img, gain: float) -> np.ndarray:
    """Scale the light intensity ``15 - level`` by ``gain`` (> 1 brighter, < 1 darker).

    Darkness saturates at level 15 and brightness at level 0, so dark pixels
    stay dark under any gain and a brighter scene keeps its contrast ordering.
    """
    if gain < 0:
        raise ValueError("gain must be nonnegative")
    img = check_image(img)
    light = np.clip(_round_half_away((MAX_LEVEL - img) * gain), 0, MAX_LEVEL)
    return (MAX_LEVEL - light).astype(np.int64)


# -- memristive edge read-out -------------------------------------------------

def output_band_edges(output_memristances, shape, spec: OutputBand) -> np.ndarray:
    m = np.asarray(output_memristances)
    return ((m >= spec.lo) & (m <= spec.hi)).reshape(shape)


def fuse_majority_edges(fuse_values, edges, shape, spec: FuseMajority) -> np.ndarray:
    """Edge map from per-fuse memristances (total, or larger half when ``per_half``)."""
    n = shape[0] * shape[1]
    over = np.asarray(fuse_values) > spec.m_t
    counts = np.bincount(edges[over, 0], minlength=n) + np.bincount(edges[over, 1], minlength=n)
    return (counts >= spec.min_count).reshape(shape)


def detect_edges_output_band(grid: Grid, spec: OutputBand) -> np.ndarray:
    return output_band_edges(grid.output_memristances(), grid.topology.shape, spec)


def detect_edges_fuse_majority(grid: Grid, spec: FuseMajority) -> np.ndarray:
    if spec.per_half:
        values = memristance_of(grid.fuse_x, grid.fuse_r_on, grid.fuse_r_off).max(axis=1)
    else:
        values = grid.fuse_memristances()
    return fuse_majority_edges(values, grid.edges, grid.topology.shape, spec)


def detect_edges(grid: Grid, spec) -> np.ndarray:
    if isinstance(spec, OutputBand):
        return detect_edges_output_band(grid, spec)
    return detect_edges_fuse_majority(grid, spec)


# -- conventional baselines ---------------------------------------------------

PREWITT_X = np.array([[-1, 0, 1], [-1, 0, 1], [-1, 0, 1]], dtype=float)
SOBEL_X = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], dtype=float)


def gradient_magnitude(img, kernel_x) -> np.ndarray:
    """``sqrt(gx**2 + gy**2)`` on the [0, 1] intensity scale, replicate padding."""
    intensity = 1.0 - check_image(img) / MAX_LEVEL
    gx = ndimage.correlate(intensity, kernel_x, mode="nearest")
    gy = ndimage.correlate(intensity, kernel_x.T, mode="nearest")
    return np.hypot(gx, gy)


def prewitt(img, threshold: float = 0.5) -> np.ndarray:
    return gradient_magnitude(img, PREWITT_X) > threshold


def sobel(img, threshold: float = 0.5) -> np.ndarray:
    return gradient_magnitude(img, SOBEL_X) > threshold


def gaussian_kernel(sigma: float, radius: int | None = None) -> np.ndarray:
    """Normalized 2-D Gaussian ``exp(-(x^2 + y^2) / (2 sigma^2)) / (2 pi sigma^2)`` on an integer lattice."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    radius = int(np.ceil(3 * sigma)) if radius is None else radius
    ax = np.arange(-radius, radius + 1)
    xx, yy = np.meshgrid(ax, ax)
    k = np.exp(-(xx**2 + yy**2) / (2 * sigma**2)) / (2 * np.pi * sigma**2)
    return k / k.sum()


def gaussian_blur(img, sigma: float) -> np.ndarray:
    """Uniform Gaussian smoothing, for comparison with the memristive network."""
    out = ndimage.convolve(check_image(img).astype(float), gaussian_kernel(sigma), mode="nearest")
    return np.clip(_round_half_away(out), 0, MAX_LEVEL).astype(np.int64)


# -- metrics ------------------------------------------------------------------

def intensity_mismatch(a, b) -> tuple[float, np.ndarray]:
    """Mean absolute level difference as a fraction of full scale, plus the per-pixel difference."""
    a, b = check_image(a), check_image(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    diff = np.abs(a.astype(np.int64) - b.astype(np.int64))
    return float(diff.mean() / MAX_LEVEL), diff


def edge_iou(a, b) -> float:
    a, b = np.asarray(a, dtype=bool), np.asarray(b, dtype=bool)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    union = np.count_nonzero(a | b)
    if union == 0:
        return 1.0
    return np.count_nonzero(a & b) / union

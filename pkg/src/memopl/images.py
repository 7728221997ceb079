"""Synthetic 16-level test images (0 = brightest).

Stand-ins for a cartoon and a Rubik's-cube picture: large flat regions with
clear edges, plus fine detail of varying contrast.
"""
from __future__ import annotations

import numpy as np


def step_image(height: int = 32, width: int = 32, left: int = 3, right: int = 12) -> np.ndarray:
    img = np.full((height, width), left, dtype=np.int64)
    img[:, width // 2:] = right
    return img


def uniform_image(height: int, width: int, level: int) -> np.ndarray:
    return np.full((height, width), level, dtype=np.int64)


def cartoon(size: int = 64) -> np.ndarray:
    """A head-and-body figure on a light background with a striped detail patch."""
    s = size / 64.0
    yy, xx = np.mgrid[0:size, 0:size] / s
    img = np.full((size, size), 2, dtype=np.int64)

    body = (np.abs(xx - 32) < 16) & (yy > 42) & (yy < 62)
    img[body] = 11
    head = (xx - 32) ** 2 + (yy - 26) ** 2 < 15**2
    img[head] = 5
    for cx in (26, 38):
        img[(xx - cx) ** 2 + (yy - 23) ** 2 < 2.3**2] = 14
    mouth = (np.abs(yy - 33) < 1.2) & (np.abs(xx - 32) < 6)
    img[mouth] = 13

    patch = (xx >= 3) & (xx < 17) & (yy >= 3) & (yy < 17)
    stripes = (np.floor(xx).astype(int) // 2) % 2 == 0
    img[patch] = np.where(stripes[patch], 8, 6)
    img[(xx >= 50) & (xx < 61) & (yy >= 4) & (yy < 15)] = 9
    return img


def rubiks_cube(size: int = 64) -> np.ndarray:
    """Oblique view of a cube: front, top and right faces, 3x3 stickers each.

    Sticker borders are dark (level 15).  The top face alternates two sticker
    levels; the front face carries low-contrast single-pixel lines.
    """
    s = size / 64.0
    img = np.full((size, size), 1, dtype=np.int64)
    x0, y0, side, depth = 10 * s, 24 * s, 33 * s, 14 * s

    yy, xx = np.mgrid[0:size, 0:size].astype(float)
    # front face: axis-aligned square
    u_f = (xx - x0) / side
    v_f = (yy - y0) / side
    front = (u_f >= 0) & (u_f < 1) & (v_f >= 0) & (v_f < 1)
    # top face: parallelogram sheared to the right going up
    v_t = (y0 - yy) / depth
    u_t = (xx - x0 - v_t * depth) / side
    top = (v_t > 0) & (v_t <= 1) & (u_t >= 0) & (u_t < 1)
    # right face: parallelogram sheared upward going right
    u_r = (xx - x0 - side) / depth
    v_r = (yy - y0 + u_r * depth) / side
    right = (u_r >= 0) & (u_r < 1) & (v_r >= 0) & (v_r < 1)

    def cells(u, v):
        return np.floor(np.clip(u, 0, 0.999) * 3).astype(int), np.floor(np.clip(v, 0, 0.999) * 3).astype(int)

    cu, cv = cells(u_f, v_f)
    img[front] = 6
    lines = (np.round(yy - y0).astype(int) % 3 == 1) & front
    img[lines] = 8
    cu, cv = cells(u_t, v_t)
    img[top] = np.where((cu + cv)[top] % 2 == 0, 4, 9)
    cu, cv = cells(u_r, v_r)
    img[right] = np.where((cu + cv)[right] % 2 == 0, 11, 10)

    for u, v, face in ((u_f, v_f, front), (u_t, v_t, top), (u_r, v_r, right)):
        for k in range(4):
            # sticker border lines about one pixel wide in image space
            near_u = np.abs(u * 3 - k) * (side if face is not right else depth) / 3 < 0.6
            near_v = np.abs(v * 3 - k) * (side if face is not top else depth) / 3 < 0.6
            img[face & (near_u | near_v)] = 15
    return img

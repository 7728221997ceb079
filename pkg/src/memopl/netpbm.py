"""Minimal PGM/PBM reader and writer.

Gray images are stored as 16-level arrays where level 0 is the brightest
pixel.  On disk the usual netpbm convention applies (larger sample = brighter),
so a level ``L`` is written as the sample ``15 - L`` with maxval 15.  Files with
maxval 255 are accepted on input and quantized with ``floor(v / 16)``.
"""
from __future__ import annotations

import numpy as np


def _tokens(data: bytes, count: int, pos: int = 0):
    """Read ``count`` whitespace-separated header tokens, skipping comments."""
    out = []
    n = len(data)
    while len(out) < count:
        while pos < n and data[pos:pos + 1].isspace():
            pos += 1
        if pos < n and data[pos:pos + 1] == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise ValueError("truncated netpbm header")
        out.append(data[start:pos])
    return out, pos


def read_netpbm(path) -> tuple[str, np.ndarray, int]:
    """Return ``(magic, samples, maxval)`` for a P1/P2/P4/P5 file."""
    with open(path, "rb") as fh:
        data = fh.read()
    magic = data[:2].decode("ascii", "replace")
    if magic in ("P1", "P4"):
        (w, h), pos = _tokens(data, 2, 2)
        w, h = int(w), int(h)
        maxval = 1
    elif magic in ("P2", "P5"):
        (w, h, maxval), pos = _tokens(data, 3, 2)
        w, h, maxval = int(w), int(h), int(maxval)
    else:
        raise ValueError(f"{path}: unsupported netpbm magic {magic!r}")

    if magic == "P1":
        body = bytes(c for c in data[pos:] if c in b"01")
        samples = np.frombuffer(body, dtype=np.uint8)[: w * h] - ord("0")
    elif magic == "P2":
        samples = np.array(_tokens(data, w * h, pos)[0], dtype=np.int64)
    elif magic == "P4":
        stride = (w + 7) // 8
        raw = np.frombuffer(data[pos + 1: pos + 1 + stride * h], dtype=np.uint8)
        samples = np.unpackbits(raw.reshape(h, stride), axis=1)[:, :w].reshape(-1)
    else:
        dtype = np.uint8 if maxval < 256 else ">u2"
        size = w * h * (1 if maxval < 256 else 2)
        samples = np.frombuffer(data[pos + 1: pos + 1 + size], dtype=dtype)
    if samples.size != w * h:
        raise ValueError(f"{path}: expected {w * h} samples, found {samples.size}")
    return magic, samples.astype(np.int64).reshape(h, w), maxval


def read_pgm(path) -> np.ndarray:
    """Read a PGM file into a 16-level image (0 = brightest)."""
    magic, samples, maxval = read_netpbm(path)
    if magic not in ("P2", "P5"):
        raise ValueError(f"{path}: not a PGM file ({magic})")
    if maxval == 15:
        bright = samples
    elif maxval == 255:
        bright = samples // 16
    else:
        bright = np.floor(samples * 16 / (maxval + 1)).astype(np.int64)
    return (15 - np.clip(bright, 0, 15)).astype(np.int64)


def write_pgm(path, levels, binary: bool = True) -> None:
    """Write a 16-level image (0 = brightest) as a maxval-15 PGM."""
    levels = np.asarray(levels)
    if levels.ndim != 2:
        raise ValueError("PGM image must be 2-D")
    if levels.min(initial=0) < 0 or levels.max(initial=0) > 15:
        raise ValueError("levels must lie in [0, 15]")
    h, w = levels.shape
    samples = (15 - levels).astype(np.uint8)
    with open(path, "wb") as fh:
        if binary:
            fh.write(f"P5\n{w} {h}\n15\n".encode("ascii"))
            fh.write(samples.tobytes())
        else:
            fh.write(f"P2\n{w} {h}\n15\n".encode("ascii"))
            for row in samples:
                fh.write((" ".join(str(int(s)) for s in row) + "\n").encode("ascii"))


def read_pbm(path) -> np.ndarray:
    magic, samples, _ = read_netpbm(path)
    if magic not in ("P1", "P4"):
        raise ValueError(f"{path}: not a PBM file ({magic})")
    return samples.astype(bool)


def write_pbm(path, flags, binary: bool = True) -> None:
    """Write a boolean map as PBM; ``True`` becomes 1 (black)."""
    flags = np.asarray(flags, dtype=bool)
    if flags.ndim != 2:
        raise ValueError("PBM image must be 2-D")
    h, w = flags.shape
    with open(path, "wb") as fh:
        if binary:
            fh.write(f"P4\n{w} {h}\n".encode("ascii"))
            fh.write(np.packbits(flags, axis=1).tobytes())
        else:
            fh.write(f"P1\n{w} {h}\n".encode("ascii"))
            for row in flags.astype(np.uint8):
                fh.write((" ".join(str(int(s)) for s in row) + "\n").encode("ascii"))

"""3D Hilbert curve indexing (Skilling's transpose algorithm) for seed ordering."""

from __future__ import annotations

import numpy as np

BITS = 16


def hilbert_sort_key(points) -> np.ndarray:
    """Hilbert-curve distance of each 3D point, for locality-preserving sorts.

    Points are quantized onto a 2^16 grid over their bounding box.
    """
    pts = np.asarray(points, dtype=np.float64)
    lo = pts.min(axis=0)
    span = pts.max(axis=0) - lo
    span[span == 0.0] = 1.0
    scale = (1 << BITS) - 1
    grid = np.clip((pts - lo) / span * scale, 0, scale).astype(np.uint64)
    keys = np.empty(len(pts), dtype=np.uint64)
    for i, (x, y, z) in enumerate(grid):
        keys[i] = _axes_to_index([int(x), int(y), int(z)], BITS)
    return keys


def _axes_to_index(x, bits):
    """Map integer axes to the Hilbert-curve distance (Skilling, 2004)."""
    n = len(x)
    m = 1 << (bits - 1)
    # inverse undo excess work
    q = m
    while q > 1:
        p = q - 1
        for i in range(n):
            if x[i] & q:
                x[0] ^= p
            else:
                t = (x[0] ^ x[i]) & p
                x[0] ^= t
                x[i] ^= t
        q >>= 1
    # Gray encode
    for i in range(1, n):
        x[i] ^= x[i - 1]
    t = 0
    q = m
    while q > 1:
        if x[n - 1] & q:
            t ^= q - 1
        q >>= 1
    for i in range(n):
        x[i] ^= t
    # interleave the transpose-format bits, most significant first
    index = 0
    for b in range(bits - 1, -1, -1):
        for i in range(n):
            index = (index << 1) | ((x[i] >> b) & 1)
    return index

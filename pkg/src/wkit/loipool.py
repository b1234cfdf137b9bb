"""Per-line feature extraction: sample along the segment, interpolate
backbone features, max-pool along the point axis, and append the line's
own geometry.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensorio import ContractError, Grid


@dataclass(frozen=True)
class PoolConfig:
    n_points: int = 32
    pool_stride: int = 4

    def __post_init__(self):
        if self.n_points < 2:
            raise ContractError(f"n_points must be >= 2, got {self.n_points}")
        if self.pool_stride < 1 or self.n_points % self.pool_stride != 0:
            raise ContractError(
                f"n_points ({self.n_points}) must be divisible by "
                f"pool_stride ({self.pool_stride})"
            )


@dataclass(frozen=True)
class LineFeatures:
    semantic: np.ndarray  # length n_points * D / pool_stride
    geometric: np.ndarray  # (center.x, center.y, shift.x, shift.y), heatmap coords


def sample_points(quad, n):
    """n points j1 + (i/(n-1)) * (j2 - j1), endpoints included."""
    if n < 2:
        raise ContractError(f"need at least 2 sample points, got {n}")
    t = np.arange(n, dtype=np.float64)[:, None] / (n - 1)
    return quad.j1[None, :] + t * (quad.j2 - quad.j1)[None, :]


def _bilinear_batch(arr, pts):
    """Bilinear gather of (N, 2) points from an (H, W[, D]) array.

    Out-of-range points clamp to the border; lines snapped to junctions
    can graze the map edge.
    """
    squeeze = arr.ndim == 2
    if squeeze:
        arr = arr[:, :, None]
    h, w = arr.shape[:2]
    x = np.clip(pts[:, 0], 0.0, w - 1.0)
    y = np.clip(pts[:, 1], 0.0, h - 1.0)
    x0 = np.minimum(np.floor(x).astype(np.int64), max(w - 2, 0))
    y0 = np.minimum(np.floor(y).astype(np.int64), max(h - 2, 0))
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    # keep the weights in the grid's dtype: float64 weights would promote
    # a float32 gather and double the memory traffic on the hot path
    wdt = arr.dtype if arr.dtype.kind == "f" else np.dtype(np.float64)
    fx = (x - x0)[:, None].astype(wdt)
    fy = (y - y0)[:, None].astype(wdt)
    one = wdt.type(1.0)
    top = arr[y0, x0] * (one - fx) + arr[y0, x1] * fx
    bot = arr[y1, x0] * (one - fx) + arr[y1, x1] * fx
    out = top * (one - fy) + bot * fy
    return out[:, 0] if squeeze else out


def bilinear(features, p):
    """Feature vector at one (x, y) point of a feature grid."""
    return _bilinear_batch(features.data, np.asarray(p, dtype=np.float64).reshape(1, 2))[0]


def loi_pool(features, quad, cfg, output_stride=4):
    """Pool a quadruplet's features from a backbone feature grid.

    The quadruplet lives in image pixels; sampling happens on the feature
    grid, so all coordinates are divided by output_stride first. The
    n_points sampled D-vectors are max-pooled in consecutive groups of
    pool_stride and flattened to length n_points * D / pool_stride.
    """
    if features.role != "features":
        raise ContractError(f"expected a features-role grid, got {features.role!r}")
    arr = features.data
    if arr.ndim != 3:
        raise ContractError(f"feature grid must be (H, W, D), got {arr.shape}")
    pts = sample_points(quad, cfg.n_points) / output_stride
    vals = _bilinear_batch(arr, pts)  # (n_points, D)
    groups = vals.reshape(cfg.n_points // cfg.pool_stride, cfg.pool_stride, -1)
    semantic = groups.max(axis=1).reshape(-1)
    geometric = np.concatenate([quad.center, quad.shift]) / output_stride
    return LineFeatures(semantic=semantic, geometric=geometric)


def pool_many(features, quads, cfg, output_stride=4):
    """loi_pool over many quadruplets with one batched gather.

    Equal to [loi_pool(features, q, cfg, output_stride) for q in quads];
    this is the hot path for whole-image scoring.
    """
    if features.role != "features":
        raise ContractError(f"expected a features-role grid, got {features.role!r}")
    arr = features.data
    if arr.ndim != 3:
        raise ContractError(f"feature grid must be (H, W, D), got {arr.shape}")
    if not quads:
        return []
    n, delta = cfg.n_points, cfg.pool_stride
    j1 = np.stack([q.j1 for q in quads])
    j2 = np.stack([q.j2 for q in quads])
    t = np.arange(n, dtype=np.float64)[None, :, None] / (n - 1)
    pts = (j1[:, None, :] + t * (j2 - j1)[:, None, :]) / output_stride
    vals = _bilinear_batch(arr, pts.reshape(-1, 2))
    groups = vals.reshape(len(quads), n // delta, delta, -1)
    semantic = groups.max(axis=2).reshape(len(quads), -1)
    geo = np.stack([np.concatenate([q.center, q.shift]) for q in quads]) / output_stride
    return [
        LineFeatures(semantic=semantic[i], geometric=geo[i])
        for i in range(len(quads))
    ]

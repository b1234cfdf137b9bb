"""Turn heatmaps, offset maps, and the shift map into discrete keypoints.

Cell convention: a heatmap cell (row r, col c) covers image pixels
[c*stride, (c+1)*stride) x [r*stride, (r+1)*stride); a keypoint decoded
at that cell lands at (cell + offset) * stride with offset in [0, 1).
Positions are (x, y) with x along columns.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensorio import ContractError, Grid

_KIND_BY_ROLE = {"junction_heat": "junction", "center_heat": "center"}


@dataclass(frozen=True)
class Keypoint:
    pos: tuple[float, float]  # (x, y)
    score: float
    kind: str  # junction | center


@dataclass(frozen=True)
class DecodeConfig:
    junction_threshold: float = 0.008
    max_junctions: int = 300
    nms_window: int = 3
    output_stride: int = 4
    center_threshold: float = 0.008
    max_centers: int = 300

    def __post_init__(self):
        for name in ("junction_threshold", "center_threshold"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ContractError(f"{name} must lie in [0, 1], got {v}")
        if self.output_stride < 1:
            raise ContractError(f"output_stride must be >= 1, got {self.output_stride}")
        if self.nms_window < 3 or self.nms_window % 2 == 0:
            raise ContractError(
                f"nms_window must be odd and >= 3, got {self.nms_window}"
            )
        if self.max_junctions < 0 or self.max_centers < 0:
            raise ContractError("max counts must be nonnegative")


def nms_local_maxima(heat, window, threshold, max_k):
    """Local-maximum cells of a 2D heatmap, strongest first.

    A cell survives when it beats every other cell in the window: strictly
    greater, or equal with the lower row-major index. Survivors below
    ``threshold`` are dropped, the rest are sorted by score descending
    (row-major index breaking ties) and truncated to ``max_k``.
    """
    if heat.role not in _KIND_BY_ROLE:
        raise ContractError(f"expected a heatmap-role grid, got {heat.role!r}")
    arr = heat.data
    if arr.ndim != 2:
        raise ContractError(f"heatmap must be 2D, got shape {arr.shape}")
    h, w = arr.shape
    radius = window // 2
    rmidx = np.arange(h * w).reshape(h, w)
    survive = arr >= threshold
    for dy in range(-radius, radius + 1):
        for dx in range(-radius, radius + 1):
            if dy == 0 and dx == 0:
                continue
            neigh = np.full_like(arr, -np.inf)
            nidx = np.full((h, w), h * w, dtype=np.int64)
            ys = slice(max(0, dy), h + min(0, dy))
            yd = slice(max(0, -dy), h + min(0, -dy))
            xs = slice(max(0, dx), w + min(0, dx))
            xd = slice(max(0, -dx), w + min(0, -dx))
            neigh[yd, xd] = arr[ys, xs]
            nidx[yd, xd] = rmidx[ys, xs]
            survive &= (arr > neigh) | ((arr == neigh) & (rmidx < nidx))
            if not survive.any():
                break
    rows, cols = np.nonzero(survive)
    scores = arr[rows, cols]
    order = np.lexsort((rows * w + cols, -scores))[:max_k]
    kind = _KIND_BY_ROLE[heat.role]
    return [
        Keypoint(
            pos=(float(cols[i]), float(rows[i])),
            score=float(scores[i]),
            kind=kind,
        )
        for i in order
    ]


def apply_offsets(kps, offset, stride):
    """Move cell-space keypoints to image pixels via the offset map.

    Offsets are clamped into [0, 1) first; a prediction outside its own
    cell would contradict what the offset map discretizes.
    """
    arr = offset.data
    if arr.ndim != 3 or arr.shape[-1] != 2:
        raise ContractError(f"offset grid must be (H, W, 2), got {arr.shape}")
    h, w = arr.shape[:2]
    hi = np.nextafter(1.0, 0.0)
    out = []
    for kp in kps:
        col, row = int(kp.pos[0]), int(kp.pos[1])
        if not (0 <= row < h and 0 <= col < w):
            raise IndexError(
                f"keypoint cell ({col}, {row}) outside {w}x{h} offset grid"
            )
        ox = min(max(float(arr[row, col, 0]), 0.0), hi)
        oy = min(max(float(arr[row, col, 1]), 0.0), hi)
        out.append(
            Keypoint(
                pos=((col + ox) * stride, (row + oy) * stride),
                score=kp.score,
                kind=kp.kind,
            )
        )
    return out


def canonical_shift(vec):
    """Flip a shift vector to point toward the image right.

    Keeps shift.x > 0, or shift.x == 0 with shift.y >= 0, so a segment's
    two endpoint orderings map to one representative.
    """
    v = np.asarray(vec, dtype=np.float64).reshape(2).copy()
    if v[0] < 0.0 or (v[0] == 0.0 and v[1] < 0.0):
        v = -v
    return v


def read_shift(centers, shift, stride):
    """Per center keypoint, the canonical half-length vector in pixels.

    Centers are image-space keypoints; each reads the shift map at its
    own cell (floor(pos / stride), clamped to the grid).
    """
    arr = shift.data
    if arr.ndim != 3 or arr.shape[-1] != 2:
        raise ContractError(f"shift grid must be (H, W, 2), got {arr.shape}")
    h, w = arr.shape[:2]
    out = []
    for kp in centers:
        col = min(max(int(np.floor(kp.pos[0] / stride)), 0), w - 1)
        row = min(max(int(np.floor(kp.pos[1] / stride)), 0), h - 1)
        out.append(canonical_shift(arr[row, col]) * stride)
    return out

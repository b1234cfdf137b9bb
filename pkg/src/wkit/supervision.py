"""Ground-truth map synthesis and the multi-task training losses.

Maps are built at the output-map resolution (ceil(image / stride)): a
binary junction heatmap, a line-central-point heatmap carrying a 1D
Gaussian along each segment, fractional-offset maps for both keypoint
kinds, and a shift map holding each line's canonical half-vector at its
central cell. Regression maps come with 0/1 validity masks; losses only
read masked cells.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .decode import canonical_shift
from .tensorio import Annotation, ContractError, Grid, NumericError

EPS = 1e-7  # probability clamp for the log terms


@dataclass(frozen=True)
class LossWeights:
    lambda_j: float = 1.0
    lambda_c: float = 1.0
    lambda_o: float = 1.0
    lambda_s: float = 1.0

    def __post_init__(self):
        for name in ("lambda_j", "lambda_c", "lambda_o", "lambda_s"):
            if getattr(self, name) < 0:
                raise ContractError(f"{name} must be nonnegative")


@dataclass(frozen=True)
class FocalParams:
    alpha: float = 2.0
    beta: float = 4.0

    def __post_init__(self):
        if self.alpha <= 0 or self.beta <= 0:
            raise ContractError("focal alpha and beta must be positive")


@dataclass(frozen=True)
class GtMaps:
    junction_heat: Grid
    center_heat: Grid
    junction_offset: Grid
    center_offset: Grid
    shift: Grid
    junction_mask: Grid
    center_mask: Grid
    shift_mask: Grid


def _cell_of(p, stride, w, h):
    cx = min(max(int(np.floor(p[0] / stride)), 0), w - 1)
    cy = min(max(int(np.floor(p[1] / stride)), 0), h - 1)
    return cx, cy


def make_gt_maps(ann, stride=4, sigma=1.0):
    """Render an annotation into training-target maps.

    The central-point heatmap holds, per covered cell, exp(-d^2 / 2 sigma^2)
    with d the arc-length distance (in cells) from the cell's projection
    onto the segment to the segment midpoint; lines combine by max and
    each line's central cell is pinned to exactly 1.0. If two lines share
    a central cell the later line's shift and offset win.
    """
    w_img, h_img = ann.size
    wm = int(np.ceil(w_img / stride))
    hm = int(np.ceil(h_img / stride))

    j_heat = np.zeros((hm, wm))
    c_heat = np.zeros((hm, wm))
    j_off = np.zeros((hm, wm, 2))
    c_off = np.zeros((hm, wm, 2))
    shift = np.zeros((hm, wm, 2))
    j_mask = np.zeros((hm, wm))
    c_mask = np.zeros((hm, wm))
    s_mask = np.zeros((hm, wm))

    for p in ann.junctions:
        cx, cy = _cell_of(p, stride, wm, hm)
        j_heat[cy, cx] = 1.0
        j_off[cy, cx] = np.clip(p / stride - (cx, cy), 0.0, np.nextafter(1.0, 0.0))
        j_mask[cy, cx] = 1.0

    for i, j in ann.lines:
        a = ann.junctions[i] / stride
        b = ann.junctions[j] / stride
        length = float(np.linalg.norm(b - a))
        mid = (a + b) / 2.0
        if length > 0.0:
            direction = (b - a) / length
            n_steps = max(2, int(np.ceil(length * 4)) + 1)
            t = np.linspace(0.0, 1.0, n_steps)[:, None]
            walk = a[None, :] + t * (b - a)[None, :]
            cells = np.unique(
                np.stack(
                    [
                        np.clip(np.round(walk[:, 0]).astype(int), 0, wm - 1),
                        np.clip(np.round(walk[:, 1]).astype(int), 0, hm - 1),
                    ],
                    axis=1,
                ),
                axis=0,
            )
            u = np.clip((cells - a) @ direction, 0.0, length)
            val = np.exp(-((u - length / 2.0) ** 2) / (2.0 * sigma * sigma))
            np.maximum.at(c_heat, (cells[:, 1], cells[:, 0]), val)
        # mid is already in cells; its cell is a plain floor, no re-scaling
        cx = min(max(int(np.floor(mid[0])), 0), wm - 1)
        cy = min(max(int(np.floor(mid[1])), 0), hm - 1)
        c_heat[cy, cx] = 1.0
        c_off[cy, cx] = np.clip(mid - (cx, cy), 0.0, np.nextafter(1.0, 0.0))
        c_mask[cy, cx] = 1.0
        shift[cy, cx] = canonical_shift((b - a) / 2.0)
        s_mask[cy, cx] = 1.0

    return GtMaps(
        junction_heat=Grid(j_heat, role="junction_heat"),
        center_heat=Grid(c_heat, role="center_heat"),
        junction_offset=Grid(j_off, role="junction_offset"),
        center_offset=Grid(c_off, role="center_offset"),
        shift=Grid(shift, role="shift_vec"),
        junction_mask=Grid(j_mask, role="generic"),
        center_mask=Grid(c_mask, role="generic"),
        shift_mask=Grid(s_mask, role="generic"),
    )


def _check_dims(pred, gt):
    if pred.data.shape != gt.data.shape:
        raise ContractError(
            f"prediction shape {pred.data.shape} does not match "
            f"target shape {gt.data.shape}"
        )


def bce_junction_loss(pred, gt):
    """Mean binary cross-entropy over every heatmap pixel."""
    _check_dims(pred, gt)
    p = np.clip(np.asarray(pred.data, dtype=np.float64), EPS, 1.0 - EPS)
    y = np.asarray(gt.data, dtype=np.float64)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


def focal_center_loss(pred, gt, params=FocalParams()):
    """Focal loss with soft Gaussian negatives.

    Pixels where the target is exactly 1 contribute (1-p)^alpha log p;
    all others contribute (1-y)^beta p^alpha log(1-p).
    """
    _check_dims(pred, gt)
    p = np.clip(np.asarray(pred.data, dtype=np.float64), EPS, 1.0 - EPS)
    y = np.asarray(gt.data, dtype=np.float64)
    pos = y == 1.0
    terms = np.where(
        pos,
        (1.0 - p) ** params.alpha * np.log(p),
        (1.0 - y) ** params.beta * p ** params.alpha * np.log(1.0 - p),
    )
    return float(-np.mean(terms))


def l1_regression_loss(pred, gt, mask):
    """Mean absolute error over masked cells; 0 when the mask is empty."""
    _check_dims(pred, gt)
    m = np.asarray(mask.data, dtype=bool)
    diff = np.abs(
        np.asarray(pred.data, dtype=np.float64) - np.asarray(gt.data, dtype=np.float64)
    )
    if diff.ndim == m.ndim + 1:
        m = m[..., None] & np.ones(diff.shape[-1], dtype=bool)
    elif diff.shape != m.shape:
        raise ContractError(
            f"mask shape {m.shape} does not match map shape {diff.shape}"
        )
    if not m.any():
        return 0.0
    return float(diff[m].mean())


def relation_loss(scores, labels):
    """Mean BCE of per-line scores against 0/1 labels; 0 for no lines."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    if scores.shape != labels.shape:
        raise ContractError(
            f"{scores.shape} scores against {labels.shape} labels"
        )
    if scores.size == 0:
        return 0.0
    p = np.clip(scores, EPS, 1.0 - EPS)
    return float(-np.mean(labels * np.log(p) + (1.0 - labels) * np.log(1.0 - p)))


def total_loss(parts, weights, line_scores, line_labels):
    """Weighted multi-task sum plus the line-classification term.

    ``parts`` is (junction, center, offset, shift). Returns the total and
    a per-term breakdown; any non-finite term raises NumericError naming it.
    """
    names = ("junction", "center", "offset", "shift")
    if len(parts) != 4:
        raise ContractError(f"expected 4 loss parts, got {len(parts)}")
    for name, value in zip(names, parts):
        if not np.isfinite(value):
            raise NumericError(f"{name} loss is not finite: {value}")
    lj, lc, lo, ls = (float(v) for v in parts)
    l_rr = relation_loss(line_scores, line_labels)
    if not np.isfinite(l_rr):
        raise NumericError(f"relation loss is not finite: {l_rr}")
    l_ml = (
        weights.lambda_j * lj
        + weights.lambda_c * lc
        + weights.lambda_o * lo
        + weights.lambda_s * ls
    )
    total = l_ml + l_rr
    breakdown = {
        "junction": lj,
        "center": lc,
        "offset": lo,
        "shift": ls,
        "multitask": l_ml,
        "relation": l_rr,
        "total": total,
    }
    return total, breakdown


def flip_annotation(ann, mode):
    """Reflect an annotation; x' = (W-1) - x and/or y' = (H-1) - y."""
    w, h = ann.size
    junctions = ann.junctions.copy()
    if mode in ("horizontal", "central"):
        junctions[:, 0] = (w - 1) - junctions[:, 0]
    if mode in ("vertical", "central"):
        junctions[:, 1] = (h - 1) - junctions[:, 1]
    if mode not in ("horizontal", "vertical", "central"):
        raise ContractError(f"unknown flip mode {mode!r}")
    return Annotation(size=ann.size, junctions=junctions, lines=ann.lines.copy())

"""Structural average precision for scored line segments.

Predictions from all images are ranked together by score; each one may
claim a single not-yet-claimed ground-truth line of its own image when
the smaller (over the two endpoint orderings) sum of squared endpoint
distances stays within the threshold. AP integrates the interpolated
precision envelope over recall.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .tensorio import ContractError, ValidationError


@dataclass(frozen=True)
class ScoredSegment:
    p1: np.ndarray
    p2: np.ndarray
    score: float

    def __post_init__(self):
        p1 = np.asarray(self.p1, dtype=np.float64).reshape(2)
        p2 = np.asarray(self.p2, dtype=np.float64).reshape(2)
        if np.array_equal(p1, p2):
            raise ValidationError(f"segment endpoints coincide at {tuple(p1)}")
        object.__setattr__(self, "p1", p1)
        object.__setattr__(self, "p2", p2)


@dataclass(frozen=True)
class SapConfig:
    distance_threshold: float = 10.0  # bound on summed squared endpoint distance
    eval_resolution: tuple[int, int] = (128, 128)

    def __post_init__(self):
        if self.distance_threshold <= 0:
            raise ContractError("distance threshold must be positive")
        object.__setattr__(
            self,
            "eval_resolution",
            (int(self.eval_resolution[0]), int(self.eval_resolution[1])),
        )


@dataclass(frozen=True)
class SapResult:
    """AP plus the PR curve and the constants that produced it."""

    ap: float
    recalls: np.ndarray
    precisions: np.ndarray
    threshold: float
    eval_resolution: tuple[int, int]
    n_gt: int
    n_pred: int
    matches: np.ndarray  # per ranked prediction, True when it claimed a GT line


def scale_to_eval(segments, image_size, eval_resolution):
    """Rescale segments from image pixels to the evaluation grid, per axis."""
    w, h = image_size
    if w <= 0 or h <= 0:
        raise ContractError(f"image size must be positive, got {image_size}")
    sx = eval_resolution[0] / w
    sy = eval_resolution[1] / h
    scale = np.array([sx, sy])
    return [
        ScoredSegment(p1=s.p1 * scale, p2=s.p2 * scale, score=s.score)
        for s in segments
    ]


def _segment_cost(p1, p2, g1, g2):
    straight = np.sum((p1 - g1) ** 2) + np.sum((p2 - g2) ** 2)
    crossed = np.sum((p1 - g2) ** 2) + np.sum((p2 - g1) ** 2)
    return min(straight, crossed)


def _gt_segments(ann, eval_resolution):
    w, h = ann.size
    scale = np.array([eval_resolution[0] / w, eval_resolution[1] / h])
    return [
        (ann.junctions[i] * scale, ann.junctions[j] * scale)
        for i, j in ann.lines
    ]


def _match_image(segs, gt, threshold):
    """Greedy matching of one image's predictions, strongest first.

    Returns, per prediction in input order, whether it claimed a GT line.
    Greedy claims are local to an image, so images are independent.
    """
    order = sorted(range(len(segs)), key=lambda i: (-segs[i].score, i))
    claimed = np.zeros(len(gt), dtype=bool)
    matched = np.zeros(len(segs), dtype=bool)
    for i in order:
        best_cost, best_g = np.inf, -1
        for g, (g1, g2) in enumerate(gt):
            if claimed[g]:
                continue
            cost = _segment_cost(segs[i].p1, segs[i].p2, g1, g2)
            if cost < best_cost:
                best_cost, best_g = cost, g
        if best_g >= 0 and best_cost <= threshold:
            claimed[best_g] = True
            matched[i] = True
    return matched


def sap(preds, gts, cfg=SapConfig(), jobs=1):
    """Structural AP of per-image predictions against annotations.

    ``preds[k]`` holds the ScoredSegments of image k in evaluation-grid
    coordinates; ``gts[k]`` is the matching Annotation (scaled here from
    its own image size). Matching is greedy in score order, ties broken
    by image then by input order, and each GT line matches once. ``jobs``
    spreads the per-image matching over threads; the PR aggregation is a
    single reduce either way.
    """
    if len(preds) != len(gts):
        raise ContractError(
            f"{len(preds)} prediction lists against {len(gts)} annotations"
        )
    gt_segs = [_gt_segments(ann, cfg.eval_resolution) for ann in gts]
    n_gt = sum(len(g) for g in gt_segs)

    if jobs > 1 and len(preds) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            per_image = list(
                pool.map(
                    _match_image,
                    preds,
                    gt_segs,
                    [cfg.distance_threshold] * len(preds),
                )
            )
    else:
        per_image = [
            _match_image(segs, gt, cfg.distance_threshold)
            for segs, gt in zip(preds, gt_segs)
        ]

    ranked = sorted(
        (-seg.score, img, idx)
        for img, segs in enumerate(preds)
        for idx, seg in enumerate(segs)
    )
    matches = np.array(
        [per_image[img][idx] for _, img, idx in ranked], dtype=bool
    )

    tp = np.cumsum(matches)
    fp = np.cumsum(~matches)
    recalls = tp / n_gt if n_gt else np.zeros(len(ranked))
    precisions = tp / np.maximum(tp + fp, 1)
    return SapResult(
        ap=_envelope_ap(recalls, precisions),
        recalls=recalls,
        precisions=precisions,
        threshold=cfg.distance_threshold,
        eval_resolution=tuple(cfg.eval_resolution),
        n_gt=n_gt,
        n_pred=len(ranked),
        matches=matches,
    )


def _envelope_ap(recalls, precisions):
    """Area under the precision envelope, all recall points."""
    if len(recalls) == 0:
        return 0.0
    mrec = np.concatenate([[0.0], recalls, [1.0]])
    mpre = np.concatenate([[0.0], precisions, [0.0]])
    for i in range(len(mpre) - 2, -1, -1):
        mpre[i] = max(mpre[i], mpre[i + 1])
    moved = np.nonzero(mrec[1:] != mrec[:-1])[0]
    return float(np.sum((mrec[moved + 1] - mrec[moved]) * mpre[moved + 1]))


def write_pr_csv(result, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rank", "matched", "precision", "recall"])
        for rank, (m, p, r) in enumerate(
            zip(result.matches, result.precisions, result.recalls)
        ):
            writer.writerow([rank, int(m), f"{p:.9f}", f"{r:.9f}"])

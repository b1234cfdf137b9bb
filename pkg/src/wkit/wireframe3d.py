"""Fuse posed RGBD frames and 2D line detections into a labeled 3D wireframe.

Per frame: depth is back-projected to world points, planes are found by
region growing over normals (or ingested from an external label grid),
and each plane is merged into a global registry keyed by image-overlap
ratio plus a normal gate. 2D lines are labeled crease / occlusion /
texture from the plane-id histogram of a band around them; creases of
the same plane pair are finally fused onto the exact intersection line
of their planes.

The global registry mutates strictly in frame order; everything else is
pure per frame.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import ConvexHull

from .tensorio import ContractError, Grid, ValidationError


class NonIntersectingError(ValueError):
    """The two planes are parallel; no intersection line exists."""


@dataclass(frozen=True)
class FusionConfig:
    overlap_ratio_threshold: float = 0.5
    normal_angle_threshold: float = 10.0  # degrees, plane merge gate
    band_halfwidth: float = 6.0  # pixels sampled each side of a line
    depth_disparity_threshold: float = 0.15  # meters, crease vs occlusion
    peak_dominance: float = 0.8  # single-plane fraction for texture
    peak_similarity: float = 0.3  # max fraction gap between the two peaks
    min_support: int = 300  # pixels per detected plane
    region_normal_angle: float = 15.0  # degrees, growing gate
    region_depth_reltol: float = 0.1  # relative depth step gate
    summary_cap: int = 400  # stored inlier points per plane

    def __post_init__(self):
        for name in (
            "overlap_ratio_threshold", "normal_angle_threshold",
            "band_halfwidth", "depth_disparity_threshold",
            "peak_dominance", "peak_similarity",
            "region_normal_angle", "region_depth_reltol",
        ):
            if getattr(self, name) <= 0:
                raise ContractError(f"{name} must be positive")
        if self.peak_dominance <= self.peak_similarity:
            raise ContractError("peak_dominance must exceed peak_similarity")
        if self.min_support < 3 or self.summary_cap < 3:
            raise ContractError("min_support and summary_cap must be >= 3")


@dataclass(frozen=True)
class Plane:
    """n . x = offset in world coordinates, with accumulated evidence."""

    id: int
    normal: np.ndarray
    offset: float
    count: int
    centroid: np.ndarray
    summary: np.ndarray  # (K, 3) bounding polygon of the inliers, in order
    sum_p: np.ndarray  # running first moment of all inliers
    sum_sq: np.ndarray  # running second moment (3x3)

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=np.float64).reshape(3)
        if abs(np.linalg.norm(n) - 1.0) > 1e-6:
            raise ValidationError(f"plane normal has length {np.linalg.norm(n)}")
        object.__setattr__(self, "normal", n)


@dataclass
class PlaneSet:
    planes: list = field(default_factory=list)
    next_id: int = 1

    def by_id(self, pid):
        for p in self.planes:
            if p.id == pid:
                return p
        raise KeyError(f"no plane with id {pid}")


@dataclass(frozen=True)
class LabeledLine:
    segment: object  # the 2D Quadruplet
    p3d: np.ndarray  # (2, 3) world endpoints
    label: str  # crease | occlusion | texture
    plane_pair: tuple | None  # two distinct global ids, creases only
    confidence: float


@dataclass(frozen=True)
class MergedCrease:
    plane_pair: tuple
    p1: np.ndarray
    p2: np.ndarray


@dataclass
class WireframeModel:
    planes: PlaneSet
    lines: list
    creases: list


@dataclass(frozen=True)
class FrameObservation:
    """One step of the fusion sequence: a posed frame plus its 2D lines.

    ``plane_labels`` bypasses the built-in detector with an externally
    produced per-pixel plane labeling (0 = unlabeled).
    """

    frame: object
    lines: tuple = ()
    plane_labels: Grid | None = None


def backproject(frame):
    """World-coordinate point per pixel, plus the valid-depth mask."""
    if frame.depth is None:
        raise ContractError("frame carries no depth grid")
    z = np.asarray(frame.depth.data, dtype=np.float64)
    h, w = z.shape
    fx, fy, cx, cy = frame.intrinsics
    u, v = np.meshgrid(np.arange(w), np.arange(h))
    pts_cam = np.stack([(u - cx) * z / fx, (v - cy) * z / fy, z], axis=-1)
    r = frame.rotation
    t = frame.translation
    pts_world = (pts_cam - t) @ r  # R^T (p_cam - t), row form
    return pts_world, z > 0.0


def estimate_normals(points, valid, frame):
    """Central-difference normals oriented toward the camera center."""
    dv = np.gradient(points, axis=0)
    du = np.gradient(points, axis=1)
    n = np.cross(du, dv)
    norm = np.linalg.norm(n, axis=-1)
    ok = valid & (norm > 1e-12)
    # a normal is only trusted where its difference stencil saw valid depth
    for shift, axis in ((1, 0), (-1, 0), (1, 1), (-1, 1)):
        ok &= np.roll(valid, shift, axis=axis)
    ok[0, :] = ok[-1, :] = ok[:, 0] = ok[:, -1] = False
    n = np.where(ok[..., None], n / np.maximum(norm, 1e-12)[..., None], 0.0)
    toward = frame.center - points
    flip = np.sum(n * toward, axis=-1) < 0.0
    n[flip] = -n[flip]
    return n, ok


def _fit_plane(points, orient_toward=None, prev_normal=None):
    c = points.mean(axis=0)
    cov = (points - c).T @ (points - c)
    eigvals, eigvecs = np.linalg.eigh(cov)
    n = eigvecs[:, 0]
    n = n / np.linalg.norm(n)
    if prev_normal is not None:
        if float(n @ prev_normal) < 0.0:
            n = -n
    elif orient_toward is not None and float(n @ (orient_toward - c)) < 0.0:
        n = -n
    return n, float(n @ c), c


def _moment_refit(sum_p, sum_sq, count, prev_normal):
    c = sum_p / count
    cov = sum_sq - np.outer(sum_p, sum_p) / count
    eigvals, eigvecs = np.linalg.eigh(cov)
    n = eigvecs[:, 0]
    n = n / np.linalg.norm(n)
    if float(n @ prev_normal) < 0.0:
        n = -n
    return n, float(n @ c), c


def _subsample(points, cap):
    if len(points) <= cap:
        return points.copy()
    idx = np.linspace(0, len(points) - 1, cap).round().astype(int)
    return points[idx]


def _plane_basis(normal):
    e = np.zeros(3)
    e[np.argmin(np.abs(normal))] = 1.0
    u = np.cross(normal, e)
    u = u / np.linalg.norm(u)
    return u, np.cross(normal, u)


def _bounding_polygon(points, normal, centroid, cap):
    """Ordered convex outline of the inliers, in the plane's own frame.

    Degenerate (collinear) regions fall back to a plain subsample; they
    enclose no area and never attract merges.
    """
    u, v = _plane_basis(normal)
    rel = points - centroid
    q = np.stack([rel @ u, rel @ v], axis=-1)
    try:
        hull = ConvexHull(q)
    except Exception:
        return _subsample(points, min(cap, 32))
    verts = hull.vertices  # counterclockwise in the (u, v) chart
    if len(verts) > cap:
        verts = verts[np.linspace(0, len(verts) - 1, cap).round().astype(int)]
    return points[verts]


def _plane_from_points(pid, points, camera_center, cap):
    n, offset, c = _fit_plane(points, orient_toward=camera_center)
    return Plane(
        id=pid,
        normal=n,
        offset=offset,
        count=len(points),
        centroid=c,
        summary=_bounding_polygon(points, n, c, cap),
        sum_p=points.sum(axis=0),
        sum_sq=points.T @ points,
    )


def detect_planes(frame, min_support=None, cfg=FusionConfig()):
    """Region-grow depth-derived normals into planes.

    Neighboring pixels join when their normals agree within the region
    angle gate and their depths step by less than the relative tolerance.
    Regions below ``min_support`` pixels are discarded. Returns planes
    (ids local, 1-based, in first-pixel order) and the label grid.
    """
    if min_support is None:
        min_support = cfg.min_support
    points, valid = backproject(frame)
    z = np.asarray(frame.depth.data, dtype=np.float64)
    h, w = z.shape
    labels = np.zeros((h, w), dtype=np.float64)
    normals, nvalid = estimate_normals(points, valid, frame)
    if not nvalid.any():
        return [], Grid(labels, role="plane_labels")

    cos_gate = np.cos(np.deg2rad(cfg.region_normal_angle))

    # Pixels straddling a fold blend both surfaces in their difference
    # stencil; their in-between normals can chain two walls into one
    # component. Kill any pixel that disagrees with a valid neighbor so
    # fold bands separate regions instead of bridging them.
    disagree = np.zeros((h, w), dtype=bool)
    for shift, axis in ((1, 0), (-1, 0), (1, 1), (-1, 1)):
        nb_n = np.roll(normals, shift, axis=axis)
        nb_ok = np.roll(nvalid, shift, axis=axis)
        dot = np.sum(normals * nb_n, axis=-1)
        disagree |= nvalid & nb_ok & (dot < cos_gate)
    nvalid = nvalid & ~disagree

    def edges(axis):
        sl_a = (slice(0, -1), slice(None)) if axis == 0 else (slice(None), slice(0, -1))
        sl_b = (slice(1, None), slice(None)) if axis == 0 else (slice(None), slice(1, None))
        ok = nvalid[sl_a] & nvalid[sl_b]
        dot = np.sum(normals[sl_a] * normals[sl_b], axis=-1)
        za, zb = z[sl_a], z[sl_b]
        step = np.abs(za - zb) <= cfg.region_depth_reltol * np.minimum(za, zb)
        ok &= (dot >= cos_gate) & step
        idx = np.arange(h * w).reshape(h, w)
        return idx[sl_a][ok], idx[sl_b][ok]

    ia0, ib0 = edges(0)
    ia1, ib1 = edges(1)
    row = np.concatenate([ia0, ia1])
    col = np.concatenate([ib0, ib1])
    graph = coo_matrix(
        (np.ones(len(row)), (row, col)), shape=(h * w, h * w)
    )
    n_comp, comp = connected_components(graph, directed=False)
    comp = comp.reshape(h, w)
    comp[~nvalid] = -1

    flat = comp.reshape(-1)
    keep = []
    for label in np.unique(flat[flat >= 0]):
        members = np.nonzero(flat == label)[0]
        if len(members) >= min_support:
            keep.append((members[0], members))
    keep.sort()

    planes = []
    cam = frame.center
    for local_id, (_, members) in enumerate(keep, start=1):
        pts = points.reshape(-1, 3)[members]
        planes.append(_plane_from_points(local_id, pts, cam, cfg.summary_cap))
        labels.reshape(-1)[members] = local_id
    return planes, Grid(labels, role="plane_labels")


def planes_from_labels(frame, label_grid, cfg=FusionConfig()):
    """Fit one plane per nonzero id of an external label grid."""
    points, valid = backproject(frame)
    lab = np.asarray(label_grid.data).astype(np.int64)
    if lab.shape != valid.shape:
        raise ContractError(
            f"label grid {lab.shape} does not match depth {valid.shape}"
        )
    planes = []
    cam = frame.center
    for pid in np.unique(lab[lab > 0]):
        mask = (lab == pid) & valid
        if mask.sum() < cfg.min_support:
            continue
        planes.append(
            _plane_from_points(int(pid), points[mask], cam, cfg.summary_cap)
        )
    return planes, label_grid


def _project_to_image(frame, pts_world):
    """Pinhole projection; returns (N, 2) pixels and an in-front mask."""
    r = frame.rotation
    t = frame.translation
    pts_cam = pts_world @ r.T + t
    z = pts_cam[:, 2]
    front = z > 1e-9
    fx, fy, cx, cy = frame.intrinsics
    uv = np.full((len(pts_world), 2), np.nan)
    uv[front, 0] = pts_cam[front, 0] / z[front] * fx + cx
    uv[front, 1] = pts_cam[front, 1] / z[front] * fy + cy
    return uv, front


def _poly_area(poly):
    if len(poly) < 3:
        return 0.0
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def _clip_halfplane(poly, a, b, c):
    """Keep the part of an ordered polygon with a*x + b*y + c >= 0."""
    out = []
    n = len(poly)
    for i in range(n):
        p, q = poly[i], poly[(i + 1) % n]
        fp = a * p[0] + b * p[1] + c
        fq = a * q[0] + b * q[1] + c
        if fp >= 0.0:
            out.append(p)
        if (fp > 0.0) != (fq > 0.0) and fp != fq:
            t = fp / (fp - fq)
            if 0.0 < t < 1.0:
                out.append(p + t * (q - p))
    return np.asarray(out) if out else np.zeros((0, 2))


def _convex_intersection_area(subject, clip):
    """Area of the intersection of two ordered convex polygons."""
    # orient the clip polygon counterclockwise so "left of edge" is inside
    x, y = clip[:, 0], clip[:, 1]
    if float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))) < 0.0:
        clip = clip[::-1]
    poly = subject
    for i in range(len(clip)):
        if len(poly) < 3:
            return 0.0
        p, q = clip[i], clip[(i + 1) % len(clip)]
        a, b = p[1] - q[1], q[0] - p[0]  # left of p->q for a CCW polygon
        c = -(a * p[0] + b * p[1])
        poly = _clip_halfplane(poly, a, b, c)
    return _poly_area(poly)


def _project_polygon(frame, poly_world, z_near=0.05):
    """Ordered world polygon -> ordered image polygon, clipped to the
    front of the camera. None when fewer than 3 vertices survive."""
    r = frame.rotation
    t = frame.translation
    cam = np.asarray(poly_world, dtype=np.float64) @ r.T + t
    out = []
    n = len(cam)
    for i in range(n):
        p, q = cam[i], cam[(i + 1) % n]
        fp, fq = p[2] - z_near, q[2] - z_near
        if fp >= 0.0:
            out.append(p)
        if (fp > 0.0) != (fq > 0.0) and fp != fq:
            tt = fp / (fp - fq)
            if 0.0 < tt < 1.0:
                out.append(p + tt * (q - p))
    if len(out) < 3:
        return None
    cam = np.asarray(out)
    fx, fy, cx, cy = frame.intrinsics
    uv = np.stack(
        [cam[:, 0] / cam[:, 2] * fx + cx, cam[:, 1] / cam[:, 2] * fy + cy],
        axis=-1,
    )
    return uv


def _overlap_ratio(frame, global_plane, new_poly_uv):
    """Share of the new plane's image footprint covered by the global
    plane's projected summary polygon."""
    new_area = _poly_area(new_poly_uv)
    if new_area <= 0.0:
        return 0.0
    glob = _project_polygon(frame, global_plane.summary)
    if glob is None:
        return 0.0
    inter = _convex_intersection_area(new_poly_uv, glob)
    return float(min(inter / new_area, 1.0))


def angle_between_deg(n1, n2):
    return float(np.rad2deg(np.arccos(np.clip(np.dot(n1, n2), -1.0, 1.0))))


def merge_plane(plane_set, new_plane, frame, cfg=FusionConfig()):
    """Merge a freshly detected plane into the global set.

    The candidate is the global plane with the highest overlap ratio of
    its image projection against the new plane's pixels; it absorbs the
    new plane when the ratio and the (oriented) normal angle both pass
    their gates. Otherwise the new plane joins with a fresh id. Existing
    ids are never reassigned. Returns the updated set and the global id.
    """
    new_uv = _project_polygon(frame, new_plane.summary)
    best_ratio, best = 0.0, None
    if new_uv is not None:
        for plane in plane_set.planes:
            ratio = _overlap_ratio(frame, plane, new_uv)
            if ratio > best_ratio:
                best_ratio, best = ratio, plane
    if (
        best is not None
        and best_ratio >= cfg.overlap_ratio_threshold
        and angle_between_deg(new_plane.normal, best.normal)
        <= cfg.normal_angle_threshold
    ):
        sum_p = best.sum_p + new_plane.sum_p
        sum_sq = best.sum_sq + new_plane.sum_sq
        count = best.count + new_plane.count
        n, offset, c = _moment_refit(sum_p, sum_sq, count, best.normal)
        summary = _bounding_polygon(
            np.concatenate([best.summary, new_plane.summary]),
            n, c, cfg.summary_cap,
        )
        merged = Plane(
            id=best.id, normal=n, offset=offset, count=count, centroid=c,
            summary=summary, sum_p=sum_p, sum_sq=sum_sq,
        )
        planes = tuple(
            merged if p.id == best.id else p for p in plane_set.planes
        )
        return PlaneSet(planes=planes, next_id=plane_set.next_id), best.id
    fresh = replace(new_plane, id=plane_set.next_id)
    return (
        PlaneSet(
            planes=tuple(plane_set.planes) + (fresh,),
            next_id=plane_set.next_id + 1,
        ),
        fresh.id,
    )


def _depth_at(frame, p, radius=5):
    """Depth at the nearest valid pixel within a small search radius."""
    z = np.asarray(frame.depth.data)
    h, w = z.shape
    x0 = int(round(p[0]))
    y0 = int(round(p[1]))
    for r in range(radius + 1):
        best = None
        for dy in range(-r, r + 1):
            for dx in range(-r, r + 1):
                if max(abs(dy), abs(dx)) != r:
                    continue
                x, y = x0 + dx, y0 + dy
                if 0 <= x < w and 0 <= y < h and z[y, x] > 0:
                    d2 = dx * dx + dy * dy
                    if best is None or d2 < best[0]:
                        best = (d2, z[y, x])
        if best is not None:
            return float(best[1])
    return 0.0


def backproject_pixel(frame, p, depth=None):
    if depth is None:
        depth = _depth_at(frame, p)
    fx, fy, cx, cy = frame.intrinsics
    pc = np.array([(p[0] - cx) * depth / fx, (p[1] - cy) * depth / fy, depth])
    return frame.rotation.T @ (pc - frame.translation)


def classify_line(quad, label_grid, frame, cfg=FusionConfig()):
    """Label a 2D line crease / occlusion / texture from plane evidence.

    Pixels in a band on both sides of the segment vote with their plane
    ids (0 abstains). One dominant id means the line lies inside a plane:
    texture. Two near-equal peaks with agreeing side depths mean a fold:
    crease, labeled with the id pair. Anything else, including two peaks
    split by a large depth gap, is an occlusion boundary. An empty band
    yields occlusion at confidence 0.
    """
    lab = np.asarray(label_grid.data).astype(np.int64)
    h, w = lab.shape
    z = np.asarray(frame.depth.data, dtype=np.float64)

    # endpoint order must not matter: sample from the lexically first end
    a, b = quad.j1, quad.j2
    if (b[0], b[1]) < (a[0], a[1]):
        a, b = b, a
    length = float(np.linalg.norm(b - a))
    n_samples = max(2, int(np.ceil(length)) + 1)
    t = np.linspace(0.0, 1.0, n_samples)[:, None]
    base = a[None, :] + t * (b - a)[None, :]
    direction = (b - a) / max(length, 1e-12)
    perp = np.array([-direction[1], direction[0]])

    offsets = np.arange(1, int(np.floor(cfg.band_halfwidth)) + 1)
    side_ids = []
    side_depths = []
    for sign in (1.0, -1.0):
        pts = (base[None, :, :] + sign * offsets[:, None, None] * perp).reshape(-1, 2)
        xi = np.round(pts[:, 0]).astype(int)
        yi = np.round(pts[:, 1]).astype(int)
        ok = (xi >= 0) & (xi < w) & (yi >= 0) & (yi < h)
        ids = lab[yi[ok], xi[ok]]
        depths = z[yi[ok], xi[ok]]
        side_ids.append(ids[ids > 0])
        side_depths.append(depths[depths > 0])

    votes = np.concatenate(side_ids) if side_ids else np.zeros(0, dtype=np.int64)
    p3d = np.stack(
        [backproject_pixel(frame, quad.j1), backproject_pixel(frame, quad.j2)]
    )
    if len(votes) == 0:
        return LabeledLine(
            segment=quad, p3d=p3d, label="occlusion", plane_pair=None,
            confidence=0.0,
        )

    counts = np.bincount(votes)
    order = np.argsort(-counts, kind="stable")
    top1 = int(order[0])
    frac1 = counts[top1] / len(votes)
    if frac1 >= cfg.peak_dominance:
        return LabeledLine(
            segment=quad, p3d=p3d, label="texture", plane_pair=None,
            confidence=float(frac1),
        )

    top2 = int(order[1]) if len(order) > 1 and counts[order[1]] > 0 else 0
    frac2 = counts[top2] / len(votes) if top2 else 0.0
    if top2 and (frac1 - frac2) <= cfg.peak_similarity:
        med = [np.median(d) if len(d) else np.inf for d in side_depths]
        gap = abs(med[0] - med[1])
        if np.isfinite(gap) and gap <= cfg.depth_disparity_threshold:
            pair = tuple(sorted((top1, top2)))
            return LabeledLine(
                segment=quad, p3d=p3d, label="crease", plane_pair=pair,
                confidence=float(frac1 + frac2),
            )
    return LabeledLine(
        segment=quad, p3d=p3d, label="occlusion", plane_pair=None,
        confidence=float(frac1),
    )


def plane_intersection(p1, p2):
    """Point + unit direction of the intersection line of two planes."""
    n1, n2 = p1.normal, p2.normal
    if abs(float(n1 @ n2)) >= 1.0 - 1e-6:
        raise NonIntersectingError(
            f"planes {p1.id} and {p2.id} are parallel (n1.n2 = {float(n1 @ n2):+.6f})"
        )
    direction = np.cross(n1, n2)
    direction = direction / np.linalg.norm(direction)
    a = np.stack([n1, n2])
    b = np.array([p1.offset, p2.offset])
    point, *_ = np.linalg.lstsq(a, b, rcond=None)  # minimum-norm solution
    return point, direction


def merge_creases(model, cfg=FusionConfig()):
    """One segment per plane pair, spanning all observed fragments.

    Fragments project onto the exact plane-intersection line; the merged
    segment runs between the extremal projections. Pairs whose planes
    drifted parallel keep their fragments and emit a warning.
    """
    groups = {}
    for line in model.lines:
        if line.label == "crease" and line.plane_pair is not None:
            groups.setdefault(line.plane_pair, []).append(line)
    creases = []
    for pair in sorted(groups):
        try:
            pa = model.planes.by_id(pair[0])
            pb = model.planes.by_id(pair[1])
            point, direction = plane_intersection(pa, pb)
        except NonIntersectingError:
            warnings.warn(
                f"plane pair {pair} became parallel; keeping fragments unmerged"
            )
            continue
        ends = np.concatenate([line.p3d for line in groups[pair]])
        s = (ends - point) @ direction
        creases.append(
            MergedCrease(
                plane_pair=pair,
                p1=point + s.min() * direction,
                p2=point + s.max() * direction,
            )
        )
    return WireframeModel(planes=model.planes, lines=model.lines, creases=creases)


def fuse_sequence(observations, cfg=FusionConfig()):
    """Run the full per-frame pipeline and close with crease merging."""
    plane_set = PlaneSet()
    lines = []
    for k, obs in enumerate(observations):
        frame = obs.frame
        if frame.depth is None or not np.isfinite(frame.pose).all():
            warnings.warn(f"frame {k} has no usable pose/depth; skipped")
            continue
        if obs.plane_labels is not None:
            local_planes, label_grid = planes_from_labels(
                frame, obs.plane_labels, cfg
            )
        else:
            local_planes, label_grid = detect_planes(frame, cfg=cfg)
        local = np.asarray(label_grid.data).astype(np.int64)
        top = max([p.id for p in local_planes], default=0)
        if local.size:
            top = max(top, int(local.max()))
        remap = np.zeros(top + 1, dtype=np.int64)
        for plane in local_planes:
            plane_set, gid = merge_plane(plane_set, plane, frame, cfg)
            remap[plane.id] = gid
        global_labels = Grid(
            remap[local].astype(np.float64), role="plane_labels"
        )
        for quad in obs.lines:
            lines.append(classify_line(quad, global_labels, frame, cfg))
    model = WireframeModel(planes=plane_set, lines=lines, creases=[])
    return merge_creases(model, cfg)


def room_extents(model):
    """Axis-aligned extents of the merged crease set, in meters."""
    if not model.creases:
        return np.zeros(3)
    pts = np.concatenate([[c.p1, c.p2] for c in model.creases])
    return pts.max(axis=0) - pts.min(axis=0)


def write_wireframe_obj(model, path, sidecar_path=None):
    """OBJ with one `l` element per merged crease, plus a JSON sidecar."""
    out = ["# 3D wireframe: merged creases"]
    for c in model.creases:
        for p in (c.p1, c.p2):
            out.append(f"v {p[0]:.6f} {p[1]:.6f} {p[2]:.6f}")
    for i in range(len(model.creases)):
        out.append(f"l {2 * i + 1} {2 * i + 2}")
    Path(path).write_text("\n".join(out) + "\n")
    if sidecar_path is not None:
        doc = {
            "planes": [
                {
                    "id": p.id,
                    "normal": [float(v) for v in p.normal],
                    "offset": p.offset,
                    "count": p.count,
                }
                for p in model.planes.planes
            ],
            "lines": [
                {
                    "label": ln.label,
                    "plane_pair": list(ln.plane_pair) if ln.plane_pair else None,
                    "confidence": ln.confidence,
                    "p3d": [[float(v) for v in p] for p in ln.p3d],
                }
                for ln in model.lines
            ],
            "creases": [
                {
                    "plane_pair": list(c.plane_pair),
                    "p1": [float(v) for v in c.p1],
                    "p2": [float(v) for v in c.p2],
                }
                for c in model.creases
            ],
            "room_extents": [float(v) for v in room_extents(model)],
        }
        Path(sidecar_path).write_text(json.dumps(doc, indent=2))

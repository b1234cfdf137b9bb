"""Synthetic fixtures: decodable random annotations, toy graph tasks for
the relation-reasoning trainer, and ray-cast RGBD frames of analytic
scenes with known planes and edges.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assemble import Quadruplet
from .decode import canonical_shift
from .loipool import LineFeatures
from .tensorio import Annotation, CameraFrame, Grid


def random_annotation(rng, size=(512, 512), n_junctions=6, n_lines=4, stride=4):
    """A random annotation whose rendered maps decode back exactly.

    Junction cells stay >= 3 cells apart (no NMS ties), line central
    cells stay >= 2 cells apart (no shift-map collisions), and every
    line is long enough that its half-vector survives the zero-shift
    filter.
    """
    w, h = size
    for _ in range(1000):
        junctions = np.column_stack(
            [
                rng.uniform(3 * stride, w - 3 * stride, n_junctions),
                rng.uniform(3 * stride, h - 3 * stride, n_junctions),
            ]
        )
        cells = np.floor(junctions / stride)
        sep = np.abs(cells[:, None, :] - cells[None, :, :]).max(axis=2)
        sep[np.diag_indices(n_junctions)] = 99
        if sep.min() < 3:
            continue
        pairs = [(i, j) for i in range(n_junctions) for j in range(i + 1, n_junctions)]
        rng.shuffle(pairs)
        lines = []
        centers = []
        for i, j in pairs:
            if len(lines) == n_lines:
                break
            mid = (junctions[i] + junctions[j]) / 2.0
            cmid = np.floor(mid / stride)
            if np.linalg.norm(junctions[j] - junctions[i]) < 4 * stride:
                continue
            if any(np.abs(cmid - c).max() < 2 for c in centers):
                continue
            lines.append((i, j))
            centers.append(cmid)
        if len(lines) < n_lines:
            continue
        used = sorted({k for line in lines for k in line})
        index = {k: v for v, k in enumerate(used)}
        return Annotation(
            size=size,
            junctions=junctions[used],
            lines=[(index[i], index[j]) for i, j in lines],
        )
    raise RuntimeError("could not place a decodable annotation; relax the constraints")


def parity_dataset(rng, n_graphs, n_vertices=10, semantic_dim=8):
    """Cycle graphs where a vertex's label is the XOR of its neighbors' bits.

    Each vertex sees only its own bit, so the label is invisible without
    message passing; one hop of context makes it learnable.
    """
    data = []
    for _ in range(n_graphs):
        bits = rng.integers(0, 2, n_vertices)
        labels = np.array(
            [
                bits[(v - 1) % n_vertices] ^ bits[(v + 1) % n_vertices]
                for v in range(n_vertices)
            ],
            dtype=np.float64,
        )
        a = np.zeros((n_vertices, n_vertices))
        for v in range(n_vertices):
            a[v, (v + 1) % n_vertices] = 1
            a[(v + 1) % n_vertices, v] = 1
        features = []
        for v in range(n_vertices):
            sem = np.zeros(semantic_dim)
            sem[0] = bits[v]
            sem[1] = 1.0 - bits[v]
            features.append(
                LineFeatures(semantic=sem, geometric=np.zeros(4))
            )
        data.append((features, a, labels))
    return data


def separable_dataset(rng, n_graphs, n_vertices=8, semantic_dim=8):
    """Labels readable off each vertex's own features; no context needed."""
    data = []
    for _ in range(n_graphs):
        labels = rng.integers(0, 2, n_vertices).astype(np.float64)
        a = np.zeros((n_vertices, n_vertices))
        features = []
        for v in range(n_vertices):
            sem = rng.normal(0.0, 0.1, semantic_dim)
            sem[0] += 2.0 * labels[v] - 1.0
            features.append(LineFeatures(semantic=sem, geometric=np.zeros(4)))
        data.append((features, a, labels))
    return data


def random_line_features(rng, n_vertices, semantic_dim=2048):
    feats = [
        LineFeatures(
            semantic=rng.normal(size=semantic_dim),
            geometric=rng.normal(size=4),
        )
        for _ in range(n_vertices)
    ]
    a = np.zeros((n_vertices, n_vertices))
    for v in range(1, n_vertices):
        u = int(rng.integers(0, v))
        a[u, v] = a[v, u] = 1
    return feats, a


@dataclass(frozen=True)
class BoxRoom:
    """Axis-aligned cuboid [0,lx] x [0,ly] x [0,lz], walls facing inward."""

    lx: float = 4.0
    ly: float = 3.0
    lz: float = 2.5

    @property
    def face_normals(self):
        # normal, offset pairs for n.x = offset with n pointing inward
        return [
            (np.array([1.0, 0.0, 0.0]), 0.0),
            (np.array([-1.0, 0.0, 0.0]), -self.lx),
            (np.array([0.0, 1.0, 0.0]), 0.0),
            (np.array([0.0, -1.0, 0.0]), -self.ly),
            (np.array([0.0, 0.0, 1.0]), 0.0),
            (np.array([0.0, 0.0, -1.0]), -self.lz),
        ]

    @property
    def edges(self):
        lx, ly, lz = self.lx, self.ly, self.lz
        c = lambda x, y, z: np.array([x, y, z])
        bottom = [
            (c(0, 0, 0), c(lx, 0, 0)), (c(lx, 0, 0), c(lx, ly, 0)),
            (c(lx, ly, 0), c(0, ly, 0)), (c(0, ly, 0), c(0, 0, 0)),
        ]
        top = [(a + (0, 0, lz), b + (0, 0, lz)) for a, b in bottom]
        verticals = [
            (c(x, y, 0), c(x, y, lz))
            for x in (0, lx)
            for y in (0, ly)
        ]
        return bottom + top + verticals


def look_at_pose(eye, target, up=(0.0, 0.0, 1.0)):
    """World-to-camera 3x4 pose for a camera at eye looking at target."""
    eye = np.asarray(eye, dtype=np.float64)
    forward = np.asarray(target, dtype=np.float64) - eye
    forward = forward / np.linalg.norm(forward)
    right = np.cross(forward, np.asarray(up, dtype=np.float64))
    right = right / np.linalg.norm(right)
    down = np.cross(forward, right)
    r = np.stack([right, down, forward])  # rows: camera x, y, z in world
    t = -r @ eye
    return np.hstack([r, t[:, None]])


def render_box_depth(room, pose, intrinsics, size):
    """Ray-cast depth of the room interior for a camera inside it."""
    w, h = size
    fx, fy, cx, cy = intrinsics
    r = pose[:, :3]
    t = pose[:, 3]
    eye = -r.T @ t
    u, v = np.meshgrid(np.arange(w, dtype=np.float64), np.arange(h, dtype=np.float64))
    dirs_cam = np.stack([(u - cx) / fx, (v - cy) / fy, np.ones_like(u)], axis=-1)
    dirs_world = dirs_cam @ r  # R^T per row
    depth = np.full((h, w), np.inf)
    for normal, offset in room.face_normals:
        denom = dirs_world @ normal
        with np.errstate(divide="ignore", invalid="ignore"):
            tt = (offset - eye @ normal) / denom
        hit = (denom < -1e-12) & (tt > 1e-9)  # ray leaving the interior
        depth = np.where(hit & (tt < depth), tt, depth)
    depth[~np.isfinite(depth)] = 0.0
    return Grid(depth, role="depth")


def box_room_frame(room, eye, target, size=(160, 120), focal=100.0):
    w, h = size
    intrinsics = (focal, focal, (w - 1) / 2.0, (h - 1) / 2.0)
    pose = look_at_pose(eye, target)
    depth = render_box_depth(room, pose, intrinsics, size)
    return CameraFrame(intrinsics=intrinsics, pose=pose, rgb_size=size, depth=depth)


def project_point(frame, p_world):
    pc = frame.rotation @ np.asarray(p_world, dtype=np.float64) + frame.translation
    if pc[2] <= 1e-9:
        return None
    fx, fy, cx, cy = frame.intrinsics
    return np.array([pc[0] / pc[2] * fx + cx, pc[1] / pc[2] * fy + cy])


def clip_segment(frame, a, b, margin=4.0, trim=0.05, min_px=10.0):
    """Visible part of 3D segment a-b as a 2D quadruplet, or None.

    The segment is trimmed at both ends (samples stay off endpoint
    singularities), clipped against the frustum of the margin-inset
    image rectangle, and kept when the visible piece projects to at
    least ``min_px`` pixels.
    """
    w, h = frame.rgb_size
    fx, fy, cx, cy = frame.intrinsics
    r, t = frame.rotation, frame.translation
    z_near = 0.05
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    a3 = a + trim * (b - a)
    b3 = b - trim * (b - a)
    pa = r @ a3 + t
    pb = r @ b3 + t
    # half-space constraints g(t) >= 0, linear along the segment
    cons = [(pa[2] - z_near, pb[2] - z_near)]
    for (f, axis, off) in ((fx, 0, cx), (fy, 1, cy)):
        lo_b = margin - off
        hi_b = ((w - 1 if axis == 0 else h - 1) - margin) - off
        cons.append((f * pa[axis] - lo_b * pa[2], f * pb[axis] - lo_b * pb[2]))
        cons.append((hi_b * pa[2] - f * pa[axis], hi_b * pb[2] - f * pb[axis]))
    t0, t1 = 0.0, 1.0
    for ga, gb in cons:
        if ga < 0.0 and gb < 0.0:
            return None
        if ga < 0.0:
            t0 = max(t0, ga / (ga - gb))
        elif gb < 0.0:
            t1 = min(t1, ga / (ga - gb))
    if t1 - t0 <= 1e-9:
        return None
    ca = pa + t0 * (pb - pa)
    cb = pa + t1 * (pb - pa)
    uva = np.array([ca[0] / ca[2] * fx + cx, ca[1] / ca[2] * fy + cy])
    uvb = np.array([cb[0] / cb[2] * fx + cx, cb[1] / cb[2] * fy + cy])
    if np.linalg.norm(uvb - uva) < min_px:
        return None
    center = (uva + uvb) / 2.0
    shift = canonical_shift((uvb - uva) / 2.0)
    return Quadruplet(
        j1=center - shift, j2=center + shift, center=center,
        shift=shift, score=1.0,
    )


def project_edges(frame, room, margin=4.0, trim=0.05, min_px=10.0):
    """Room edges visible in the frame, as 2D quadruplets."""
    quads = []
    for a, b in room.edges:
        q = clip_segment(frame, a, b, margin=margin, trim=trim, min_px=min_px)
        if q is not None:
            quads.append(q)
    return quads


def orbit_headings(yaw_step=15, pitches=(0.0, 35.0, -35.0)):
    """(yaw, pitch) headings for a camera rotating in place.

    The four wall-facing headings come first so each wall is seeded by
    a full frontal view before grazing views of it appear; rings then
    grow every region gradually.
    """
    yaws = list(range(0, 360, yaw_step))
    headings = [(float(y), 0.0) for y in (0, 90, 180, 270)]
    headings += [(float(y), 0.0) for y in yaws if y not in (0, 90, 180, 270)]
    headings += [(float(y), p) for p in pitches if p != 0.0 for y in yaws]
    return headings


def heading_frame(room, eye, yaw, pitch, size=(160, 120), focal=80.0):
    """Frame for a camera at eye looking along a yaw/pitch heading."""
    cp = np.cos(np.deg2rad(pitch))
    d = np.array([
        cp * np.cos(np.deg2rad(yaw)),
        cp * np.sin(np.deg2rad(yaw)),
        np.sin(np.deg2rad(pitch)),
    ])
    return box_room_frame(room, eye=eye, target=np.asarray(eye) + d, size=size, focal=focal)


def edge_views(room, eye, size=(160, 120), focal=80.0, margin=10.0):
    """One frame per room edge, aimed at its midpoint, with the edge's
    clipped 2D segment. Edges whose clipped projection degenerates are
    skipped."""
    views = []
    for a, b in room.edges:
        mid = (np.asarray(a, dtype=np.float64) + b) / 2.0
        frame = box_room_frame(room, eye=eye, target=mid, size=size, focal=focal)
        quad = clip_segment(frame, a, b, margin=margin)
        if quad is not None:
            views.append((frame, quad))
    return views

import os

# pin BLAS to one thread before numpy loads anywhere: the latency budget
# is per-core, and threaded GEMM makes timings incomparable across hosts
os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
os.environ.setdefault("OMP_NUM_THREADS", "1")
os.environ.setdefault("MKL_NUM_THREADS", "1")

from dataclasses import replace

import numpy as np
import pytest

from wkit import synth, wireframe3d


@pytest.fixture(scope="session")
def room():
    return synth.BoxRoom(4.0, 3.0, 2.5)


@pytest.fixture(scope="session")
def room_eye():
    return np.array([2.0, 1.5, 1.25])


@pytest.fixture(scope="session")
def fusion_cfg():
    # min_support raised so grazing wall slivers at ring entry never seed
    # a plane; every other knob stays at its default
    return replace(wireframe3d.FusionConfig(), min_support=2500)


@pytest.fixture(scope="session")
def cuboid_observations(room, room_eye):
    """Palindromic sweep from the room center plus one framed view per edge.

    The closing reversed ring makes the sequence read the same from both
    ends, so order-reversal tests compare like against like: either
    direction opens with a frontal wall view that seeds clean planes.
    """
    orbit = [
        synth.heading_frame(room, room_eye, yaw, pitch)
        for yaw, pitch in synth.orbit_headings()
    ]
    edge_frames = synth.edge_views(room, room_eye)
    obs = [wireframe3d.FrameObservation(frame=f) for f in orbit]
    obs += [
        wireframe3d.FrameObservation(frame=f, lines=(q,))
        for f, q in edge_frames
    ]
    obs += [wireframe3d.FrameObservation(frame=f) for f in reversed(orbit)]
    return obs


@pytest.fixture(scope="session")
def fused_room(cuboid_observations, fusion_cfg):
    return wireframe3d.fuse_sequence(cuboid_observations, cfg=fusion_cfg)


def crease_rms_to_edges(crease, edges3d, n_samples=33):
    """RMS distance of points sampled along a crease to the closest
    analytic edge segment."""
    ts = np.linspace(0.0, 1.0, n_samples)
    samples = crease.p1[None, :] + ts[:, None] * (crease.p2 - crease.p1)
    best = np.inf
    for a, b in edges3d:
        d = b - a
        tproj = np.clip((samples - a) @ d / float(d @ d), 0.0, 1.0)
        near = a + tproj[:, None] * d
        rms = float(np.sqrt(np.mean(np.sum((samples - near) ** 2, axis=-1))))
        best = min(best, rms)
    return best

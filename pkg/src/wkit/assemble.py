"""Assemble line proposals from centers + shifts and build the candidate graph.

A proposal's endpoints are center - shift and center + shift. Endpoints
are then matched against decoded junction candidates; survivors get
snapped endpoints, and lines sharing a snapped junction become adjacent
vertices of the candidate graph.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .decode import Keypoint, canonical_shift
from .tensorio import ContractError, ValidationError


@dataclass(frozen=True)
class Quadruplet:
    """One line segment: endpoints, central point, shift vector, score."""

    j1: np.ndarray
    j2: np.ndarray
    center: np.ndarray
    shift: np.ndarray
    score: float = 1.0
    matched: tuple[bool, bool] = (False, False)

    def __post_init__(self):
        for name in ("j1", "j2", "center", "shift"):
            v = np.asarray(getattr(self, name), dtype=np.float64).reshape(2)
            v.flags.writeable = False
            object.__setattr__(self, name, v)
        s = self.shift
        if s[0] == 0.0 and s[1] == 0.0:
            raise ValidationError("shift vector must be nonzero")
        if s[0] < 0.0 or (s[0] == 0.0 and s[1] < 0.0):
            raise ValidationError(f"shift {tuple(s)} is not canonical")
        if not any(self.matched):
            # endpoints are center -/+ shift until matching replaces them
            if not (
                np.array_equal(self.j1, self.center - s)
                and np.array_equal(self.j2, self.center + s)
            ):
                raise ValidationError("endpoints disagree with center and shift")

    @property
    def length(self) -> float:
        return float(np.linalg.norm(self.j2 - self.j1))


@dataclass(frozen=True)
class AssembleConfig:
    theta: float = 15.0  # endpoint-match total-distance bound, pixels

    def __post_init__(self):
        if self.theta <= 0:
            raise ContractError(f"theta must be positive, got {self.theta}")


@dataclass(frozen=True)
class CandidateGraph:
    vertices: list
    junctions: np.ndarray  # (J, 2) distinct snapped coordinates
    incidence: list  # per junction, indices of incident vertices
    adjacency: np.ndarray  # (N, N) uint8, symmetric, zero diagonal


def make_proposals(centers, shifts, scores):
    """One quadruplet per center; zero-shift centers are dropped."""
    if not (len(centers) == len(shifts) == len(scores)):
        raise ContractError(
            f"aligned lists expected, got {len(centers)} centers, "
            f"{len(shifts)} shifts, {len(scores)} scores"
        )
    out = []
    for c, s, sc in zip(centers, shifts, scores):
        pos = c.pos if isinstance(c, Keypoint) else c
        center = np.asarray(pos, dtype=np.float64).reshape(2)
        vec = np.asarray(s, dtype=np.float64).reshape(2)
        if vec[0] == 0.0 and vec[1] == 0.0:
            continue
        vec = canonical_shift(vec)
        out.append(
            Quadruplet(
                j1=center - vec,
                j2=center + vec,
                center=center,
                shift=vec,
                score=float(sc),
            )
        )
    return out


def match_endpoints(proposals, junctions, theta):
    """Snap proposal endpoints to their nearest junction candidates.

    Each endpoint independently takes the nearest junction (first wins
    on ties). A proposal survives when the two distances sum to at most
    theta and the two junctions are distinct; junctions no surviving
    proposal uses are dropped.
    """
    if not proposals or not junctions:
        return [], []
    jxy = np.array(
        [j.pos if isinstance(j, Keypoint) else j for j in junctions],
        dtype=np.float64,
    )
    e1 = np.array([q.j1 for q in proposals])
    e2 = np.array([q.j2 for q in proposals])
    d1 = np.linalg.norm(e1[:, None, :] - jxy[None, :, :], axis=2)
    d2 = np.linalg.norm(e2[:, None, :] - jxy[None, :, :], axis=2)
    i1 = np.argmin(d1, axis=1)
    i2 = np.argmin(d2, axis=1)
    total = d1[np.arange(len(proposals)), i1] + d2[np.arange(len(proposals)), i2]
    ok = (i1 != i2) & (total <= theta)
    kept = []
    used = set()
    for k in np.nonzero(ok)[0]:
        a, b = int(i1[k]), int(i2[k])
        used.add(a)
        used.add(b)
        q = proposals[k]
        kept.append(
            Quadruplet(
                j1=jxy[a],
                j2=jxy[b],
                center=q.center,
                shift=q.shift,
                score=q.score,
                matched=(True, True),
            )
        )
    used_junctions = [junctions[i] for i in sorted(used)]
    return kept, used_junctions


def build_graph(kept):
    """Candidate graph over snapped quadruplets.

    Junction identity is the exact snapped coordinate pair; two vertices
    are adjacent iff they share a junction-table entry.
    """
    n = len(kept)
    table = {}  # coordinate tuple -> junction-table index
    coords = []
    incidence = []
    for k, q in enumerate(kept):
        for endpoint in (q.j1, q.j2):
            key = (float(endpoint[0]), float(endpoint[1]))
            idx = table.get(key)
            if idx is None:
                idx = len(coords)
                table[key] = idx
                coords.append(key)
                incidence.append([])
            incidence[idx].append(k)
    adjacency = np.zeros((n, n), dtype=np.uint8)
    for members in incidence:
        for a in members:
            for b in members:
                if a != b:
                    adjacency[a, b] = 1
    return CandidateGraph(
        vertices=list(kept),
        junctions=np.array(coords, dtype=np.float64).reshape(-1, 2),
        incidence=incidence,
        adjacency=adjacency,
    )

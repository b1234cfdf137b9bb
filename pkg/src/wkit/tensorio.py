"""File formats and in-memory containers shared by the whole pipeline.

Three kinds of data move between stages:

* dense numeric grids (heatmaps, offset/shift maps, backbone features,
  depth) in a minimal binary container, magic ``WGT1``:
  ``"WGT1" | u32 ndim | u32*ndim dims | u8 dtype (0=f32, 1=f64) |
  u8 role | payload little-endian row-major``
* 2D wireframe annotations as UTF-8 JSON with keys ``size``,
  ``junctions``, ``lines``
* camera frames as JSON ``{"fx","fy","cx","cy","pose"}`` with the pose a
  row-major 3x4 world-to-camera transform

All containers are immutable after construction and safe to share
read-only across threads; file writes are single-writer.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MAGIC = b"WGT1"

# wire codes are part of the format; never reorder
ROLES = (
    "junction_heat",
    "center_heat",
    "junction_offset",
    "center_offset",
    "shift_vec",
    "features",
    "depth",
    "plane_labels",
    "generic",
)
_ROLE_CODE = {name: i for i, name in enumerate(ROLES)}

_HEAT_ROLES = ("junction_heat", "center_heat")
_TWO_CHANNEL_ROLES = ("junction_offset", "center_offset", "shift_vec")

_DTYPE_CODE = {"f32": 0, "f64": 1}
_DTYPE_NP = {"f32": np.dtype("<f4"), "f64": np.dtype("<f8")}

_MAX_NDIM = 16
_MAX_ELEMENTS = 1 << 33


class FormatError(ValueError):
    """A file does not conform to one of the wire formats."""


class ValidationError(ValueError):
    """A value violates its declared invariants."""


class ContractError(ValueError):
    """An operation was called outside its contract."""


class NumericError(ArithmeticError):
    """A computation produced NaN or otherwise lost numeric meaning."""


@dataclass(frozen=True)
class Grid:
    """A dense row-major array with a role tag describing its contents."""

    data: np.ndarray
    role: str = "generic"

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.dtype == np.float32:
            object.__setattr__(self, "data", np.ascontiguousarray(arr))
        elif arr.dtype == np.float64:
            object.__setattr__(self, "data", np.ascontiguousarray(arr))
        else:
            arr = np.ascontiguousarray(arr, dtype=np.float64)
            object.__setattr__(self, "data", arr)
        validate_grid(self)

    @property
    def dims(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def dtype_name(self) -> str:
        return "f32" if self.data.dtype == np.float32 else "f64"


def validate_grid(grid: Grid) -> None:
    if grid.role not in _ROLE_CODE:
        raise ValidationError(f"unknown grid role {grid.role!r}")
    if grid.data.ndim == 0 or 0 in grid.data.shape:
        raise ValidationError("grid must have at least one element in every dim")
    if grid.role in _HEAT_ROLES:
        lo, hi = float(grid.data.min()), float(grid.data.max())
        if lo < 0.0 or hi > 1.0:
            raise ValidationError(
                f"{grid.role} values must lie in [0, 1], found [{lo}, {hi}]"
            )
    if grid.role in _TWO_CHANNEL_ROLES:
        if grid.data.ndim < 2 or grid.data.shape[-1] != 2:
            raise ValidationError(
                f"{grid.role} grid needs exactly 2 channels in the last dim, "
                f"got shape {grid.data.shape}"
            )
    if grid.role == "depth" and float(grid.data.min()) < 0.0:
        raise ValidationError("depth values must be >= 0 (0 marks invalid)")


def write_grid(grid: Grid, path) -> None:
    """Serialize a grid to the WGT1 container at ``path``."""
    validate_grid(grid)
    dims = grid.data.shape
    header = MAGIC + struct.pack("<I", len(dims))
    header += struct.pack(f"<{len(dims)}I", *dims)
    header += struct.pack(
        "<BB", _DTYPE_CODE[grid.dtype_name], _ROLE_CODE[grid.role]
    )
    payload = np.ascontiguousarray(
        grid.data, dtype=_DTYPE_NP[grid.dtype_name]
    ).tobytes(order="C")
    try:
        Path(path).write_bytes(header + payload)
    except OSError as exc:
        raise OSError(f"writing grid to {path}: {exc}") from exc


def read_grid(path) -> Grid:
    """Read a WGT1 grid, verifying the header against the file size."""
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise OSError(f"reading grid from {path}: {exc}") from exc

    if len(raw) < 8 or raw[:4] != MAGIC:
        raise FormatError(f"{path}: bad magic, expected {MAGIC!r}")
    (ndim,) = struct.unpack_from("<I", raw, 4)
    if ndim == 0 or ndim > _MAX_NDIM:
        raise FormatError(f"{path}: ndim {ndim} out of range [1, {_MAX_NDIM}]")
    header_len = 8 + 4 * ndim + 2
    if len(raw) < header_len:
        raise FormatError(f"{path}: truncated header, dims incomplete")
    dims = struct.unpack_from(f"<{ndim}I", raw, 8)
    if any(d == 0 for d in dims):
        raise FormatError(f"{path}: zero extent in dims {dims}")
    n_elem = 1
    for d in dims:
        n_elem *= d
        if n_elem > _MAX_ELEMENTS:
            raise FormatError(f"{path}: dims {dims} overflow element budget")
    dtype_code, role_code = struct.unpack_from("<BB", raw, 8 + 4 * ndim)
    if dtype_code not in (0, 1):
        raise FormatError(f"{path}: unknown dtype code {dtype_code}")
    if role_code >= len(ROLES):
        raise FormatError(f"{path}: unknown role code {role_code}")
    dtype = _DTYPE_NP["f32" if dtype_code == 0 else "f64"]
    expected = n_elem * dtype.itemsize
    actual = len(raw) - header_len
    if actual != expected:
        raise FormatError(
            f"{path}: payload holds {actual} bytes, header declares {expected}"
        )
    data = np.frombuffer(raw, dtype=dtype, count=n_elem, offset=header_len)
    return Grid(data.reshape(dims).copy(), role=ROLES[role_code])


@dataclass(frozen=True)
class Annotation:
    """Ground-truth junctions and the line segments connecting them."""

    size: tuple[int, int]  # (W, H) pixels
    junctions: np.ndarray  # (N, 2) float64, pixel coordinates
    lines: np.ndarray  # (M, 2) int, index pairs into junctions

    def __post_init__(self):
        object.__setattr__(
            self, "size", (int(self.size[0]), int(self.size[1]))
        )
        junctions = np.asarray(self.junctions, dtype=np.float64).reshape(-1, 2)
        lines = np.asarray(self.lines, dtype=np.int64).reshape(-1, 2)
        object.__setattr__(self, "junctions", junctions)
        object.__setattr__(self, "lines", lines)
        validate_annotation(self)


def validate_annotation(ann: Annotation) -> None:
    if ann.size[0] <= 0 or ann.size[1] <= 0:
        raise ValidationError(f"image size must be positive, got {ann.size}")
    n = len(ann.junctions)
    seen = set()
    for k, (i, j) in enumerate(ann.lines):
        if i == j:
            raise ValidationError(f"line {k} joins junction {i} to itself")
        if not (0 <= i < n) or not (0 <= j < n):
            raise ValidationError(
                f"line {k} = ({i}, {j}) indexes outside {n} junctions"
            )
        key = (min(i, j), max(i, j))
        if key in seen:
            raise ValidationError(f"line {k} duplicates pair {key}")
        seen.add(key)


def write_annotation(ann: Annotation, path) -> None:
    validate_annotation(ann)
    doc = {
        "size": list(ann.size),
        "junctions": [[float(x), float(y)] for x, y in ann.junctions],
        "lines": [[int(i), int(j)] for i, j in ann.lines],
    }
    Path(path).write_text(json.dumps(doc), encoding="utf-8")


def read_annotation(path) -> Annotation:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise OSError(f"reading annotation from {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON: {exc}") from exc
    for key in ("size", "junctions", "lines"):
        if key not in doc:
            raise FormatError(f"{path}: missing key {key!r}")
    return Annotation(
        size=tuple(doc["size"]),
        junctions=np.asarray(doc["junctions"], dtype=np.float64).reshape(-1, 2),
        lines=np.asarray(doc["lines"], dtype=np.int64).reshape(-1, 2),
    )


@dataclass(frozen=True)
class CameraFrame:
    """Pinhole intrinsics plus a world-to-camera pose and optional depth."""

    intrinsics: tuple[float, float, float, float]  # fx, fy, cx, cy
    pose: np.ndarray  # 3x4 [R | t], world -> camera
    rgb_size: tuple[int, int] | None = None  # (W, H)
    depth: Grid | None = None

    def __post_init__(self):
        pose = np.asarray(self.pose, dtype=np.float64).reshape(3, 4)
        object.__setattr__(self, "pose", pose)
        object.__setattr__(
            self, "intrinsics", tuple(float(v) for v in self.intrinsics)
        )
        validate_camera(self)

    @property
    def rotation(self) -> np.ndarray:
        return self.pose[:, :3]

    @property
    def translation(self) -> np.ndarray:
        return self.pose[:, 3]

    @property
    def center(self) -> np.ndarray:
        """Camera center in world coordinates."""
        return -self.rotation.T @ self.translation


def validate_camera(frame: CameraFrame) -> None:
    r = frame.rotation
    err = float(np.abs(r @ r.T - np.eye(3)).max())
    if err > 1e-6:
        raise ValidationError(
            f"pose rotation block is not orthonormal (max deviation {err:.2e})"
        )
    if frame.depth is not None and frame.depth.role != "depth":
        raise ValidationError("camera depth grid must carry the depth role")


def write_camera(frame: CameraFrame, path) -> None:
    fx, fy, cx, cy = frame.intrinsics
    doc = {
        "fx": fx,
        "fy": fy,
        "cx": cx,
        "cy": cy,
        "pose": [float(v) for v in frame.pose.reshape(-1)],
    }
    if frame.rgb_size is not None:
        doc["size"] = [int(frame.rgb_size[0]), int(frame.rgb_size[1])]
    Path(path).write_text(json.dumps(doc), encoding="utf-8")


def read_camera(path, depth: Grid | None = None) -> CameraFrame:
    """Read a camera JSON; optionally attach a depth grid loaded separately."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise OSError(f"reading camera from {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON: {exc}") from exc
    for key in ("fx", "fy", "cx", "cy", "pose"):
        if key not in doc:
            raise FormatError(f"{path}: missing key {key!r}")
    pose = np.asarray(doc["pose"], dtype=np.float64)
    if pose.size != 12:
        raise FormatError(f"{path}: pose must hold 12 floats, got {pose.size}")
    rgb_size = tuple(doc["size"]) if "size" in doc else None
    if rgb_size is None and depth is not None:
        rgb_size = (depth.dims[1], depth.dims[0])
    return CameraFrame(
        intrinsics=(doc["fx"], doc["fy"], doc["cx"], doc["cy"]),
        pose=pose.reshape(3, 4),
        rgb_size=rgb_size,
        depth=depth,
    )

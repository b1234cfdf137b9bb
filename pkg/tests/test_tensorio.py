import hashlib
import json
import struct
from pathlib import Path

import numpy as np
import pytest

import wkit
from wkit import tensorio
from wkit.tensorio import (
    Annotation,
    CameraFrame,
    FormatError,
    Grid,
    ValidationError,
    read_annotation,
    read_camera,
    read_grid,
    write_annotation,
    write_camera,
    write_grid,
)

GOLDEN = Path(__file__).parent / "golden"


def test_grid_zero_case(tmp_path):
    g = Grid(np.zeros((2, 2), dtype=np.float32), role="generic")
    p = tmp_path / "z.wgt1"
    write_grid(g, p)
    back = read_grid(p)
    assert back.dims == (2, 2)
    assert back.data.dtype == np.float32
    assert np.count_nonzero(back.data) == 0


def test_single_element_file_is_18_bytes(tmp_path):
    g = Grid(np.array([1.0], dtype=np.float32), role="generic")
    p = tmp_path / "one.wgt1"
    write_grid(g, p)
    raw = p.read_bytes()
    assert len(raw) == 18
    # magic | u32 ndim | u32 dim | u8 dtype | u8 role | f32 payload
    assert raw[:4] == b"WGT1"
    assert struct.unpack_from("<I", raw, 4)[0] == 1
    assert struct.unpack_from("<I", raw, 8)[0] == 1
    assert raw[12] == 0
    assert struct.unpack_from("<f", raw, 14)[0] == 1.0


def test_round_trip_bit_exact_100_random(tmp_path):
    rng = np.random.default_rng(7)
    for i in range(100):
        ndim = int(rng.integers(1, 4))
        dims = tuple(int(rng.integers(1, 9)) for _ in range(ndim))
        dtype = np.float32 if rng.integers(2) else np.float64
        role = "generic" if rng.integers(2) else "features"
        g = Grid(rng.normal(size=dims).astype(dtype), role=role)
        p = tmp_path / f"g{i}.wgt1"
        write_grid(g, p)
        first = p.read_bytes()
        back = read_grid(p)
        assert back.role == g.role
        assert back.data.dtype == g.data.dtype
        assert np.array_equal(
            back.data.view(np.uint8), g.data.view(np.uint8)
        ), "payload must survive bit-exactly"
        write_grid(back, p)
        assert p.read_bytes() == first


def test_feature_grid_dims(tmp_path):
    g = Grid(np.zeros((128, 128, 256), dtype=np.float32), role="features")
    p = tmp_path / "f.wgt1"
    write_grid(g, p)
    assert read_grid(p).dims == (128, 128, 256)


def test_heat_role_range_enforced():
    with pytest.raises(ValidationError, match="junction_heat"):
        Grid(np.array([[1.5]]), role="junction_heat")
    with pytest.raises(ValidationError, match=r"\[0, 1\]"):
        Grid(np.array([[-0.1]]), role="center_heat")


def test_two_channel_roles_enforced():
    with pytest.raises(ValidationError, match="2 channels"):
        Grid(np.zeros((4, 4, 3)), role="shift_vec")
    Grid(np.zeros((4, 4, 2)), role="shift_vec")


def test_depth_nonnegative():
    with pytest.raises(ValidationError, match="depth"):
        Grid(np.array([[-1.0]]), role="depth")


def test_empty_grid_rejected():
    with pytest.raises(ValidationError):
        Grid(np.zeros((0, 3)), role="generic")


def test_bad_magic(tmp_path):
    p = tmp_path / "bad.wgt1"
    p.write_bytes(b"NOPE" + b"\x00" * 14)
    with pytest.raises(FormatError, match="magic"):
        read_grid(p)


def test_truncated_payload_names_byte_counts(tmp_path):
    g = Grid(np.zeros(4, dtype=np.float32), role="generic")
    p = tmp_path / "t.wgt1"
    write_grid(g, p)
    p.write_bytes(p.read_bytes()[:-3])
    with pytest.raises(FormatError, match="payload holds .* header declares"):
        read_grid(p)


def test_unknown_role_code(tmp_path):
    g = Grid(np.zeros(1, dtype=np.float32), role="generic")
    p = tmp_path / "r.wgt1"
    write_grid(g, p)
    raw = bytearray(p.read_bytes())
    raw[13] = 200
    p.write_bytes(bytes(raw))
    with pytest.raises(FormatError, match="role code"):
        read_grid(p)


def test_missing_file_is_oserror(tmp_path):
    with pytest.raises(OSError):
        read_grid(tmp_path / "absent.wgt1")


def test_annotation_minimal_instance(tmp_path):
    p = tmp_path / "a.json"
    p.write_text(
        json.dumps(
            {
                "size": [512, 512],
                "junctions": [[5, 10], [15, 10]],
                "lines": [[0, 1]],
            }
        )
    )
    ann = read_annotation(p)
    assert ann.size == (512, 512)
    assert len(ann.junctions) == 2
    assert len(ann.lines) == 1


def test_annotation_degenerate_line_rejected():
    with pytest.raises(ValidationError, match="itself"):
        Annotation(size=(64, 64), junctions=[[1, 1], [2, 2]], lines=[[0, 0]])


def test_annotation_index_out_of_range():
    with pytest.raises(ValidationError, match="indexes outside"):
        Annotation(size=(64, 64), junctions=[[1, 1], [2, 2]], lines=[[0, 5]])


def test_annotation_duplicate_pair_rejected():
    with pytest.raises(ValidationError, match="duplicates"):
        Annotation(
            size=(64, 64),
            junctions=[[1, 1], [2, 2]],
            lines=[[0, 1], [1, 0]],
        )


def test_annotation_round_trip_100_random(tmp_path):
    rng = np.random.default_rng(11)
    for i in range(100):
        n = int(rng.integers(2, 9))
        junctions = rng.uniform(0, 500, size=(n, 2))
        pairs = [(a, b) for a in range(n) for b in range(a + 1, n)]
        k = int(rng.integers(1, len(pairs) + 1))
        pick = rng.choice(len(pairs), size=k, replace=False)
        lines = [pairs[j] for j in pick]
        ann = Annotation(size=(512, 512), junctions=junctions, lines=lines)
        p = tmp_path / f"a{i}.json"
        write_annotation(ann, p)
        back = read_annotation(p)
        assert back.size == ann.size
        assert np.array_equal(back.junctions, ann.junctions)
        assert np.array_equal(back.lines, ann.lines)


def test_annotation_missing_key(tmp_path):
    p = tmp_path / "k.json"
    p.write_text(json.dumps({"size": [4, 4], "junctions": []}))
    with pytest.raises(FormatError, match="lines"):
        read_annotation(p)


def test_camera_round_trip(tmp_path):
    pose = np.hstack([np.eye(3), np.array([[0.5], [1.0], [2.0]])])
    frame = CameraFrame(
        intrinsics=(80.0, 80.0, 79.5, 59.5), pose=pose, rgb_size=(160, 120)
    )
    p = tmp_path / "cam.json"
    write_camera(frame, p)
    back = read_camera(p)
    assert back.intrinsics == frame.intrinsics
    assert np.array_equal(back.pose, frame.pose)
    assert back.rgb_size == (160, 120)
    assert np.allclose(back.center, -pose[:, :3].T @ pose[:, 3])


def test_camera_rotation_must_be_orthonormal():
    pose = np.hstack([np.eye(3) * 2.0, np.zeros((3, 1))])
    with pytest.raises(ValidationError, match="orthonormal"):
        CameraFrame(intrinsics=(1, 1, 0, 0), pose=pose)


def test_camera_depth_role_checked():
    pose = np.hstack([np.eye(3), np.zeros((3, 1))])
    with pytest.raises(ValidationError, match="depth role"):
        CameraFrame(
            intrinsics=(1, 1, 0, 0),
            pose=pose,
            depth=Grid(np.ones((4, 4)), role="generic"),
        )


# --- golden files: the on-disk formats may not drift without a version bump


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def test_golden_files_pinned():
    assert wkit.FORMAT_VERSION == 1, (
        "format version changed: regenerate the golden files and update "
        "the hashes below"
    )
    expected = json.loads((GOLDEN / "SHA256SUMS.json").read_text())
    for name, digest in expected.items():
        assert _sha256(GOLDEN / name) == digest, (
            f"golden file {name} changed on disk; formats are frozen at "
            f"FORMAT_VERSION {wkit.FORMAT_VERSION}"
        )


def test_golden_grid_content():
    g = read_grid(GOLDEN / "ramp.wgt1")
    assert g.role == "features"
    assert g.dims == (3, 4, 2)
    expect = np.stack(
        [
            np.add.outer(np.arange(3.0), np.arange(4.0)),
            np.full((3, 4), 0.5),
        ],
        axis=-1,
    ).astype(np.float32)
    assert np.array_equal(g.data, expect)


def test_golden_annotation_content():
    ann = read_annotation(GOLDEN / "triangle.json")
    assert ann.size == (512, 512)
    assert np.array_equal(
        ann.junctions, [[40.0, 40.0], [400.0, 72.0], [220.0, 360.0]]
    )
    assert np.array_equal(ann.lines, [[0, 1], [1, 2], [2, 0]])


def test_golden_camera_content():
    frame = read_camera(GOLDEN / "camera.json")
    assert frame.intrinsics == (80.0, 80.0, 79.5, 59.5)
    assert frame.rgb_size == (160, 120)
    assert np.allclose(frame.center, [2.0, 1.5, 1.25])

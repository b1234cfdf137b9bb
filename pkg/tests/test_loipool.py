import numpy as np
import pytest

from wkit.assemble import Quadruplet
from wkit.decode import canonical_shift
from wkit.loipool import (
    LineFeatures,
    PoolConfig,
    bilinear,
    loi_pool,
    pool_many,
    sample_points,
)
from wkit.tensorio import ContractError, Grid


def _quad(p1, p2):
    p1 = np.asarray(p1, dtype=np.float64)
    p2 = np.asarray(p2, dtype=np.float64)
    center = (p1 + p2) / 2.0
    shift = canonical_shift((p2 - p1) / 2.0)
    return Quadruplet(
        j1=center - shift, j2=center + shift, center=center, shift=shift,
    )


def _features(arr):
    return Grid(np.asarray(arr), role="features")


def test_sample_points_uniform():
    q = _quad([0, 0], [3, 0])
    pts = sample_points(q, 4)
    assert np.array_equal(pts, [[0, 0], [1, 0], [2, 0], [3, 0]])


def test_sample_points_two_is_endpoints():
    q = _quad([0, 0], [1, 1])
    assert np.array_equal(sample_points(q, 2), [[0, 0], [1, 1]])


def test_sample_points_collinear_uniform_random():
    q = _quad([2, 5], [10, 9])
    pts = sample_points(q, 32)
    assert pts.shape == (32, 2)
    d = q.j2 - q.j1
    t = (pts - q.j1) @ d / float(d @ d)
    # collinear: residual orthogonal component vanishes
    offsets = pts - (q.j1 + t[:, None] * d)
    assert np.abs(offsets).max() < 1e-12
    assert np.allclose(np.diff(t), t[1] - t[0])
    assert t[0] == 0.0 and t[-1] == 1.0


def test_sample_points_needs_two():
    with pytest.raises(ContractError, match="at least 2"):
        sample_points(_quad([0, 0], [1, 0]), 1)


def test_bilinear_integer_point_identity():
    rng = np.random.default_rng(0)
    arr = rng.normal(size=(6, 7, 3))
    f = _features(arr)
    assert np.array_equal(bilinear(f, (4, 2)), arr[2, 4])


def test_bilinear_constant_map():
    f = _features(np.full((5, 5, 2), 3.25))
    for p in [(0.5, 0.5), (1.7, 3.1), (4.0, 4.0)]:
        assert np.allclose(bilinear(f, p), 3.25)


def test_bilinear_linear_ramp():
    x = np.tile(np.arange(8.0), (8, 1))
    f = _features(x[:, :, None])
    assert bilinear(f, (2.25, 7))[0] == pytest.approx(2.25, abs=1e-12)


def test_bilinear_bilinear_form_oracle():
    rng = np.random.default_rng(4)
    arr = rng.normal(size=(9, 9))
    f = _features(arr[:, :, None])
    for _ in range(50):
        x, y = rng.uniform(0, 8, size=2)
        x0, y0 = int(np.floor(x)), int(np.floor(y))
        x1, y1 = min(x0 + 1, 8), min(y0 + 1, 8)
        fx, fy = x - x0, y - y0
        want = (
            arr[y0, x0] * (1 - fx) * (1 - fy)
            + arr[y0, x1] * fx * (1 - fy)
            + arr[y1, x0] * (1 - fx) * fy
            + arr[y1, x1] * fx * fy
        )
        assert bilinear(f, (x, y))[0] == pytest.approx(want, abs=1e-12)


def test_bilinear_clamps_to_border():
    arr = np.arange(16.0).reshape(4, 4)
    f = _features(arr[:, :, None])
    assert bilinear(f, (-3, 0))[0] == arr[0, 0]
    assert bilinear(f, (9, 9))[0] == arr[3, 3]


def test_pool_semantic_length_default_2048():
    rng = np.random.default_rng(1)
    f = _features(rng.normal(size=(32, 32, 256)))
    out = loi_pool(f, _quad([8, 8], [100, 88]), PoolConfig())
    assert out.semantic.shape == (2048,)  # 32 points / 4 per group * 256


def test_pool_constant_map():
    f = _features(np.full((16, 16, 3), 1.5))
    out = loi_pool(f, _quad([0, 0], [60, 60]), PoolConfig())
    assert np.allclose(out.semantic, 1.5)


def test_pool_group_max_oracle():
    # f(x, y) = x on the feature grid; horizontal line makes each pooled
    # group the max (= last) of its consecutive 4 samples
    x = np.tile(np.arange(32.0), (32, 1))
    f = _features(x[:, :, None])
    q = _quad([0, 16], [124, 16])  # image pixels, /4 -> grid x in [0, 31]
    cfg = PoolConfig(n_points=32, pool_stride=4)
    out = loi_pool(f, q, cfg, output_stride=4)
    pts = sample_points(q, 32) / 4.0
    want = pts[:, 0].reshape(8, 4).max(axis=1)
    assert np.allclose(out.semantic, want, atol=1e-12)


def test_pool_monotone_in_map_values():
    rng = np.random.default_rng(8)
    base = rng.uniform(0.0, 1.0, size=(16, 16, 4))
    q = _quad([3, 5], [50, 57])
    lo = loi_pool(_features(base), q, PoolConfig())
    hi = loi_pool(_features(base + 0.25), q, PoolConfig())
    assert np.all(hi.semantic >= lo.semantic)


def test_pool_geometric_is_scaled_center_shift():
    q = _quad([0, 8], [16, 8])
    out = loi_pool(_features(np.zeros((8, 8, 1))), q, PoolConfig(), output_stride=4)
    assert np.array_equal(out.geometric, [2.0, 2.0, 2.0, 0.0])


def test_pool_endpoint_swap_invariant_set():
    # reversing j1/j2 re-canonicalizes to the same quadruplet, so pooled
    # features agree exactly
    rng = np.random.default_rng(9)
    f = _features(rng.normal(size=(16, 16, 5)))
    a, b = np.array([10.0, 40.0]), np.array([52.0, 12.0])
    qa, qb = _quad(a, b), _quad(b, a)
    assert np.array_equal(qa.shift, qb.shift)
    oa = loi_pool(f, qa, PoolConfig())
    ob = loi_pool(f, qb, PoolConfig())
    assert np.array_equal(oa.semantic, ob.semantic)
    assert np.array_equal(oa.geometric, ob.geometric)


def test_pool_requires_features_role():
    g = Grid(np.zeros((4, 4, 2)), role="generic")
    with pytest.raises(ContractError, match="features-role"):
        loi_pool(g, _quad([0, 0], [4, 4]), PoolConfig())
    with pytest.raises(ContractError, match="features-role"):
        pool_many(g, [_quad([0, 0], [4, 4])], PoolConfig())


def test_pool_config_guards():
    with pytest.raises(ContractError, match="divisible"):
        PoolConfig(n_points=10, pool_stride=4)
    with pytest.raises(ContractError, match="n_points"):
        PoolConfig(n_points=1, pool_stride=1)


def test_pool_many_equals_map_of_loi_pool():
    rng = np.random.default_rng(21)
    f32 = _features(rng.normal(size=(24, 24, 8)).astype(np.float32))
    f64 = _features(rng.normal(size=(24, 24, 8)))
    quads = [
        _quad(rng.uniform(0, 96, size=2), rng.uniform(0, 96, size=2))
        for _ in range(20)
    ]
    for f in (f32, f64):
        batch = pool_many(f, quads, PoolConfig(), output_stride=4)
        for q, got in zip(quads, batch):
            want = loi_pool(f, q, PoolConfig(), output_stride=4)
            assert np.array_equal(got.semantic, want.semantic)
            assert np.array_equal(got.geometric, want.geometric)


def test_pool_many_empty():
    f = _features(np.zeros((4, 4, 1)))
    assert pool_many(f, [], PoolConfig()) == []


def test_pool_many_preserves_f32():
    rng = np.random.default_rng(2)
    f = _features(rng.normal(size=(16, 16, 4)).astype(np.float32))
    (out,) = pool_many(f, [_quad([0, 0], [32, 32])], PoolConfig())
    assert out.semantic.dtype == np.float32

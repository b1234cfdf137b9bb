import csv

import numpy as np
import pytest

from wkit.metrics import (
    SapConfig,
    ScoredSegment,
    sap,
    scale_to_eval,
    write_pr_csv,
)
from wkit.tensorio import Annotation, ContractError, ValidationError


def _seg(p1, p2, score):
    return ScoredSegment(p1=np.asarray(p1, float), p2=np.asarray(p2, float), score=score)


def _ann_at_eval(junctions, lines, res=(128, 128)):
    """Annotation already in evaluation coordinates (scale factor 1)."""
    return Annotation(size=res, junctions=junctions, lines=lines)


def brute_force_pr(preds, gts, threshold, res=(128, 128)):
    """Pure-python re-derivation: greedy per-image claims in score order,
    global ranking, raw PR points, envelope area by direct integration."""
    per_image = []
    for segs, ann in zip(preds, gts):
        scale = (res[0] / ann.size[0], res[1] / ann.size[1])
        gt = [
            (
                (ann.junctions[i][0] * scale[0], ann.junctions[i][1] * scale[1]),
                (ann.junctions[j][0] * scale[0], ann.junctions[j][1] * scale[1]),
            )
            for i, j in ann.lines
        ]
        claimed = [False] * len(gt)
        flags = [False] * len(segs)
        for i in sorted(range(len(segs)), key=lambda k: (-segs[k].score, k)):
            best, where = None, -1
            for g, (g1, g2) in enumerate(gt):
                if claimed[g]:
                    continue
                d1 = sum((a - b) ** 2 for a, b in zip(segs[i].p1, g1)) + sum(
                    (a - b) ** 2 for a, b in zip(segs[i].p2, g2)
                )
                d2 = sum((a - b) ** 2 for a, b in zip(segs[i].p1, g2)) + sum(
                    (a - b) ** 2 for a, b in zip(segs[i].p2, g1)
                )
                cost = min(d1, d2)
                if best is None or cost < best:
                    best, where = cost, g
            if where >= 0 and best <= threshold:
                claimed[where] = True
                flags[i] = True
        per_image.append(flags)

    ranked = sorted(
        (-segs[i].score, img, i)
        for img, segs in enumerate(preds)
        for i in range(len(segs))
    )
    flags = [per_image[img][i] for _, img, i in ranked]
    n_gt = sum(len(a.lines) for a in gts)
    recalls, precisions = [], []
    tp = 0
    for k, f in enumerate(flags):
        tp += int(f)
        recalls.append(tp / n_gt if n_gt else 0.0)
        precisions.append(tp / (k + 1))
    area = 0.0
    prev = 0.0
    for r in sorted(set(recalls)):
        if r <= prev:
            continue
        p = max(pr for rr, pr in zip(recalls, precisions) if rr >= r)
        area += (r - prev) * p
        prev = r
    return area, recalls, precisions, flags


def test_perfect_predictions_ap_one():
    ann = _ann_at_eval([[10, 10], [60, 10], [60, 80]], [[0, 1], [1, 2]])
    preds = [
        [_seg([10, 10], [60, 10], 0.4), _seg([60, 10], [60, 80], 0.9)]
    ]
    result = sap(preds, [ann])
    assert result.ap == 1.0
    assert result.n_gt == 2 and result.n_pred == 2
    assert result.matches.all()


def test_no_predictions_ap_zero():
    ann = _ann_at_eval([[10, 10], [60, 10]], [[0, 1]])
    result = sap([[]], [ann])
    assert result.ap == 0.0
    assert result.n_pred == 0


def test_no_gt_lines_ap_zero():
    ann = _ann_at_eval([[10, 10], [60, 10]], [])
    result = sap([[_seg([0, 0], [5, 5], 1.0)]], [ann])
    assert result.ap == 0.0


def test_hand_instance_matches_oracle_exactly():
    # 2 GT lines; ranked predictions hit, miss, hit
    ann = _ann_at_eval([[10, 10], [60, 10], [60, 80]], [[0, 1], [1, 2]])
    preds = [
        [
            _seg([10, 10], [60, 10], 0.9),  # exact hit
            _seg([100, 100], [120, 120], 0.8),  # far from everything
            _seg([60, 11], [60, 81], 0.7),  # hit within threshold
        ]
    ]
    result = sap(preds, [ann], SapConfig(distance_threshold=10.0))
    assert np.array_equal(result.matches, [True, False, True])
    assert np.allclose(result.precisions, [1.0, 0.5, 2.0 / 3.0], atol=1e-15)
    assert np.allclose(result.recalls, [0.5, 0.5, 1.0], atol=1e-15)
    want_ap = 0.5 * 1.0 + 0.5 * (2.0 / 3.0)
    assert result.ap == pytest.approx(want_ap, abs=1e-12)
    oracle_ap, o_rec, o_pre, o_flags = brute_force_pr(
        preds, [ann], 10.0
    )
    assert result.ap == pytest.approx(oracle_ap, abs=1e-12)
    assert np.allclose(result.recalls, o_rec, atol=1e-15)
    assert np.allclose(result.precisions, o_pre, atol=1e-15)


def test_matches_brute_force_on_random_instances():
    rng = np.random.default_rng(19)
    for _ in range(50):
        n_img = int(rng.integers(1, 4))
        gts, preds = [], []
        for _ in range(n_img):
            n_j = int(rng.integers(2, 7))
            junctions = rng.uniform(5, 120, size=(n_j, 2))
            pairs = [(a, b) for a in range(n_j) for b in range(a + 1, n_j)]
            k = int(rng.integers(1, min(len(pairs), 5) + 1))
            lines = [pairs[i] for i in rng.choice(len(pairs), k, replace=False)]
            ann = _ann_at_eval(junctions, lines)
            gts.append(ann)
            segs = []
            for i, j in lines:
                if rng.random() < 0.8:
                    noise = rng.normal(scale=1.0, size=(2, 2))
                    segs.append(
                        _seg(
                            junctions[i] + noise[0],
                            junctions[j] + noise[1],
                            float(rng.random()),
                        )
                    )
            for _ in range(int(rng.integers(0, 3))):
                segs.append(
                    _seg(
                        rng.uniform(0, 128, 2), rng.uniform(0, 128, 2),
                        float(rng.random()),
                    )
                )
            preds.append(segs)
        result = sap(preds, gts, SapConfig(distance_threshold=10.0))
        oracle_ap, o_rec, o_pre, o_flags = brute_force_pr(preds, gts, 10.0)
        assert result.ap == pytest.approx(oracle_ap, abs=1e-12)
        assert list(result.matches) == o_flags


def test_score_monotone_transform_invariance():
    rng = np.random.default_rng(20)
    transforms = [
        lambda s: 3.0 * s + 1.0,
        lambda s: float(np.exp(s)),
        lambda s: -1.0 / (1.0 + s),
    ]
    for _ in range(50):
        junctions = rng.uniform(5, 120, size=(5, 2))
        lines = [[0, 1], [1, 2], [2, 3], [3, 4]]
        ann = _ann_at_eval(junctions, lines)
        segs = []
        for i, j in lines:
            segs.append(
                _seg(
                    junctions[i] + rng.normal(scale=2.0, size=2),
                    junctions[j] + rng.normal(scale=2.0, size=2),
                    float(rng.random()),
                )
            )
        base = sap([segs], [ann])
        for t in transforms:
            mapped = [
                ScoredSegment(p1=s.p1, p2=s.p2, score=t(s.score)) for s in segs
            ]
            out = sap([mapped], [ann])
            assert out.ap == base.ap
            assert np.array_equal(out.matches, base.matches)


def test_endpoint_order_irrelevant():
    ann = _ann_at_eval([[10, 10], [60, 10]], [[0, 1]])
    forward = sap([[_seg([10, 10], [60, 10], 1.0)]], [ann])
    backward = sap([[_seg([60, 10], [10, 10], 1.0)]], [ann])
    assert forward.ap == backward.ap == 1.0


def test_threshold_boundary_inclusive():
    ann = _ann_at_eval([[10, 10], [60, 10]], [[0, 1]])
    # one endpoint off by (3, 1): summed squared distance exactly 10
    off = _seg([13.0, 11.0], [60, 10], 1.0)
    at = sap([[off]], [ann], SapConfig(distance_threshold=10.0))
    assert at.matches[0]


def test_each_gt_claimed_once():
    ann = _ann_at_eval([[10, 10], [60, 10]], [[0, 1]])
    dup = [
        _seg([10, 10], [60, 10], 0.9),
        _seg([10, 10], [60, 10], 0.8),
    ]
    result = sap([dup], [ann])
    assert list(result.matches) == [True, False]
    assert result.ap == 1.0


def test_cross_image_ranking():
    ann_a = _ann_at_eval([[10, 10], [60, 10]], [[0, 1]])
    ann_b = _ann_at_eval([[20, 20], [90, 20]], [[0, 1]])
    preds = [
        [_seg([100, 100], [120, 100], 0.9)],  # strong miss in image A
        [_seg([20, 20], [90, 20], 0.5)],  # weaker hit in image B
    ]
    result = sap(preds, [ann_a, ann_b])
    assert list(result.matches) == [False, True]
    assert np.allclose(result.precisions, [0.0, 0.5])


def test_jobs_parallel_equals_serial():
    rng = np.random.default_rng(25)
    gts, preds = [], []
    for _ in range(6):
        junctions = rng.uniform(5, 120, size=(4, 2))
        ann = _ann_at_eval(junctions, [[0, 1], [2, 3]])
        gts.append(ann)
        preds.append(
            [
                _seg(junctions[0], junctions[1] + rng.normal(size=2), 0.7),
                _seg(rng.uniform(0, 128, 2), rng.uniform(0, 128, 2), 0.3),
            ]
        )
    serial = sap(preds, gts, jobs=1)
    parallel = sap(preds, gts, jobs=4)
    assert serial.ap == parallel.ap
    assert np.array_equal(serial.matches, parallel.matches)


def test_scale_to_eval_uniform():
    segs = [_seg([40, 80], [400, 80], 1.0)]
    (out,) = scale_to_eval(segs, (512, 512), (128, 128))
    assert np.array_equal(out.p1, [10.0, 20.0])
    assert np.array_equal(out.p2, [100.0, 20.0])


def test_scale_to_eval_per_axis():
    segs = [_seg([320, 240], [640, 480], 1.0)]
    (out,) = scale_to_eval(segs, (640, 480), (128, 128))
    assert np.allclose(out.p1, [64.0, 64.0])
    assert np.allclose(out.p2, [128.0, 128.0])


def test_scale_to_eval_identity():
    segs = [_seg([3, 4], [7, 9], 0.5)]
    (out,) = scale_to_eval(segs, (128, 128), (128, 128))
    assert np.array_equal(out.p1, segs[0].p1)
    assert np.array_equal(out.p2, segs[0].p2)


def test_scale_rejects_bad_size():
    with pytest.raises(ContractError, match="positive"):
        scale_to_eval([], (0, 128), (128, 128))


def test_scored_segment_rejects_degenerate():
    with pytest.raises(ValidationError, match="coincide"):
        ScoredSegment(p1=[1.0, 2.0], p2=[1.0, 2.0], score=0.5)


def test_sap_config_guard():
    with pytest.raises(ContractError, match="positive"):
        SapConfig(distance_threshold=0.0)


def test_mismatched_lists_rejected():
    with pytest.raises(ContractError, match="annotation"):
        sap([[]], [])


def test_pr_csv_rows(tmp_path):
    ann = _ann_at_eval([[10, 10], [60, 10], [60, 80]], [[0, 1], [1, 2]])
    preds = [
        [
            _seg([10, 10], [60, 10], 0.9),
            _seg([100, 100], [120, 120], 0.8),
            _seg([60, 11], [60, 81], 0.7),
        ]
    ]
    result = sap(preds, [ann])
    path = tmp_path / "pr.csv"
    write_pr_csv(result, path)
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["rank", "matched", "precision", "recall"]
    assert len(rows) == 4
    assert rows[1][1] == "1" and rows[2][1] == "0"
    assert float(rows[3][3]) == pytest.approx(1.0)

"""Command-line front end for the wireframe pipeline.

Subcommands: decode, assemble, score, detect, make-gt, eval-sap, fuse3d,
gradcheck, train-toy, bench. Exit codes: 0 success, 2 validation or
format error, 3 I/O error, 4 numeric failure. JSON outputs are
deterministic for a fixed --seed.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import statistics
import sys
import time
from pathlib import Path

import numpy as np

from . import assemble as asm
from . import decode as dec
from . import gnn, loipool, metrics, supervision, synth, wireframe3d
from .config import ENV_VAR, PipelineConfig, load_config
from .tensorio import (
    Annotation,
    ContractError,
    FormatError,
    Grid,
    NumericError,
    ValidationError,
    read_annotation,
    read_camera,
    read_grid,
    write_grid,
)


class StageError(Exception):
    """Wraps a pipeline-stage failure with the stage's name."""

    def __init__(self, stage, cause):
        super().__init__(f"stage {stage}: {cause}")
        self.stage = stage
        self.cause = cause


def _dump_json(doc, path):
    text = json.dumps(doc, indent=2, sort_keys=True)
    if path is None or path == "-":
        print(text)
    else:
        Path(path).write_text(text + "\n")


def _cfg_for(args):
    cfg = load_config(getattr(args, "config", None))
    if getattr(args, "seed", None) is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    if getattr(args, "weights", None) is not None:
        cfg = dataclasses.replace(
            cfg, gnn=dataclasses.replace(cfg.gnn, weights_path=args.weights)
        )
    return cfg


def _maybe_print_config(args, cfg):
    if getattr(args, "print_config", False):
        print(cfg.to_json())
        return True
    return False


def _grids_by_role(paths, wanted):
    grids = {}
    for p in paths:
        g = read_grid(p)
        if g.role in grids:
            raise ContractError(f"two inputs carry the role {g.role!r}")
        grids[g.role] = g
    missing = [r for r in wanted if r not in grids]
    if missing:
        raise ContractError(
            f"missing grids for roles {missing}; got {sorted(grids)}"
        )
    return grids


def _decode_all(grids, cfg):
    d = cfg.decode
    junctions = dec.nms_local_maxima(
        grids["junction_heat"], d.nms_window, d.junction_threshold, d.max_junctions
    )
    junctions = dec.apply_offsets(
        junctions, grids["junction_offset"], d.output_stride
    )
    centers = dec.nms_local_maxima(
        grids["center_heat"], d.nms_window, d.center_threshold, d.max_centers
    )
    centers = dec.apply_offsets(centers, grids["center_offset"], d.output_stride)
    shifts = dec.read_shift(centers, grids["shift_vec"], d.output_stride)
    return junctions, centers, shifts


def _keypoints_doc(junctions, centers, shifts, stride):
    kp = lambda k: {"pos": [k.pos[0], k.pos[1]], "score": k.score}
    return {
        "stride": stride,
        "junctions": [kp(k) for k in junctions],
        "centers": [kp(k) for k in centers],
        "shifts": [[s[0], s[1]] for s in shifts],
    }


def cmd_decode(args):
    cfg = _cfg_for(args)
    if _maybe_print_config(args, cfg):
        return 0
    if not args.heat or not args.offset or not args.shift:
        raise ContractError("decode needs --heat (x2), --offset (x2), --shift")
    grids = _grids_by_role(
        args.heat + args.offset + [args.shift],
        ("junction_heat", "center_heat", "junction_offset", "center_offset",
         "shift_vec"),
    )
    junctions, centers, shifts = _decode_all(grids, cfg)
    _dump_json(
        _keypoints_doc(junctions, centers, shifts, cfg.decode.output_stride),
        args.out,
    )
    return 0


def _assemble_from_keypoints(doc, cfg):
    centers = [
        dec.Keypoint(pos=tuple(c["pos"]), score=c["score"], kind="center")
        for c in doc["centers"]
    ]
    junctions = [
        dec.Keypoint(pos=tuple(j["pos"]), score=j["score"], kind="junction")
        for j in doc["junctions"]
    ]
    shifts = [np.asarray(s) for s in doc["shifts"]]
    proposals = asm.make_proposals(
        centers, shifts, [c.score for c in centers]
    )
    kept, _ = asm.match_endpoints(proposals, junctions, cfg.assemble.theta)
    return asm.build_graph(kept)


def _graph_doc(graph):
    pairs = [
        [int(k), int(l)]
        for k in range(len(graph.vertices))
        for l in range(k + 1, len(graph.vertices))
        if graph.adjacency[k, l]
    ]
    return {
        "lines": [
            {
                "j1": list(q.j1), "j2": list(q.j2),
                "center": list(q.center), "shift": list(q.shift),
                "score": q.score,
            }
            for q in graph.vertices
        ],
        "junctions": [list(j) for j in graph.junctions],
        "adjacency": pairs,
    }


def _graph_from_doc(doc):
    quads = [
        asm.Quadruplet(
            j1=np.asarray(l["j1"]), j2=np.asarray(l["j2"]),
            center=np.asarray(l["center"]), shift=np.asarray(l["shift"]),
            score=l["score"], matched=(True, True),
        )
        for l in doc["lines"]
    ]
    n = len(quads)
    adjacency = np.zeros((n, n), dtype=np.uint8)
    for k, l in doc["adjacency"]:
        adjacency[k, l] = adjacency[l, k] = 1
    return quads, adjacency


def cmd_assemble(args):
    cfg = _cfg_for(args)
    if _maybe_print_config(args, cfg):
        return 0
    doc = json.loads(Path(args.keypoints).read_text())
    graph = _assemble_from_keypoints(doc, cfg)
    _dump_json(_graph_doc(graph), args.out)
    return 0


def _model_for(cfg, semantic_dim):
    if cfg.gnn.weights_path is not None:
        model = gnn.load_model(cfg.gnn.weights_path)
        if model.semantic_dim != semantic_dim:
            raise ContractError(
                f"weights expect semantic dim {model.semantic_dim}, "
                f"pooling produces {semantic_dim}"
            )
        return model
    # no weights configured: neutral positive bias, candidates pass through
    return gnn.constant_score_model(
        semantic_dim, d=cfg.gnn.d, n=cfg.gnn.n, hidden=cfg.gnn.hidden, logit=2.0
    )


def _score_graph(quads, adjacency, features, cfg):
    feats = loipool.pool_many(
        features, quads, cfg.pool, cfg.decode.output_stride
    )
    if not feats:
        return np.zeros(0)
    model = _model_for(cfg, len(feats[0].semantic))
    return gnn.forward(model, feats, adjacency)


def cmd_score(args):
    cfg = _cfg_for(args)
    if _maybe_print_config(args, cfg):
        return 0
    doc = json.loads(Path(args.graph).read_text())
    quads, adjacency = _graph_from_doc(doc)
    features = read_grid(args.features)
    scores = _score_graph(quads, adjacency, features, cfg)
    out = _graph_doc(
        asm.CandidateGraph(
            vertices=quads, junctions=np.zeros((0, 2)), incidence=[],
            adjacency=adjacency,
        )
    )
    out.pop("junctions")
    out["scores"] = [float(s) for s in scores]
    for line, s in zip(out["lines"], scores):
        line["score"] = float(s)
    _dump_json(out, args.out)
    return 0


def _staged(stage, fn, *fargs, **kwargs):
    try:
        return fn(*fargs, **kwargs)
    except StageError:
        raise
    except Exception as exc:
        raise StageError(stage, exc) from exc


def detect_lines(grids, features, cfg):
    """decode -> assemble -> pool -> score, returning scored quadruplets."""
    junctions, centers, shifts = _staged("decode", _decode_all, grids, cfg)
    graph = _staged(
        "assemble",
        lambda: asm.build_graph(
            asm.match_endpoints(
                asm.make_proposals(
                    centers, shifts, [c.score for c in centers]
                ),
                junctions,
                cfg.assemble.theta,
            )[0]
        ),
    )
    feats = _staged(
        "pool", loipool.pool_many, features, graph.vertices, cfg.pool,
        cfg.decode.output_stride,
    )
    if feats:
        model = _model_for(cfg, len(feats[0].semantic))
        scores = _staged("score", gnn.forward, model, feats, graph.adjacency)
    else:
        scores = np.zeros(0)
    order = sorted(
        range(len(graph.vertices)), key=lambda i: (-scores[i], i)
    )
    return [
        (graph.vertices[i], float(scores[i]))
        for i in order
    ]


def _detect_one(heat, offset, shift, features, cfg):
    grids = _staged(
        "decode",
        _grids_by_role,
        heat + offset + [shift],
        ("junction_heat", "center_heat", "junction_offset", "center_offset",
         "shift_vec"),
    )
    feature_grid = _staged("pool", read_grid, features)
    lines = detect_lines(grids, feature_grid, cfg)
    return {
        "lines": [
            {"p1": list(q.j1), "p2": list(q.j2), "score": s}
            for q, s in lines
        ]
    }


def cmd_detect(args):
    cfg = _cfg_for(args)
    if _maybe_print_config(args, cfg):
        return 0
    if args.manifest:
        base = Path(args.manifest).parent
        doc = json.loads(Path(args.manifest).read_text())
        entries = doc["images"] if isinstance(doc, dict) else doc

        def run(entry):
            return _detect_one(
                [str(base / p) for p in entry["heat"]],
                [str(base / p) for p in entry["offset"]],
                str(base / entry["shift"]),
                str(base / entry["features"]),
                cfg,
            )

        if args.jobs > 1:
            from concurrent.futures import ThreadPoolExecutor

            with ThreadPoolExecutor(max_workers=args.jobs) as pool:
                results = list(pool.map(run, entries))
        else:
            results = [run(e) for e in entries]
        _dump_json({"images": results}, args.out)
        return 0
    if not (args.heat and args.offset and args.shift and args.features):
        raise ContractError(
            "detect needs --heat/--offset/--shift/--features or --manifest"
        )
    _dump_json(
        _detect_one(args.heat, args.offset, args.shift, args.features, cfg),
        args.out,
    )
    return 0


def cmd_make_gt(args):
    cfg = _cfg_for(args)
    if _maybe_print_config(args, cfg):
        return 0
    stride = args.stride if args.stride is not None else cfg.gt.stride
    sigma = args.sigma if args.sigma is not None else cfg.gt.sigma
    ann = read_annotation(args.ann)
    maps = supervision.make_gt_maps(ann, stride=stride, sigma=sigma)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name in (
        "junction_heat", "center_heat", "junction_offset", "center_offset",
        "shift", "junction_mask", "center_mask", "shift_mask",
    ):
        write_grid(getattr(maps, name), out / f"{name}.wgt1")
    print(f"wrote 8 maps to {out}")
    return 0


def _segments_from_doc(image_doc, eval_resolution):
    segs = [
        metrics.ScoredSegment(
            p1=np.asarray(l["p1"]), p2=np.asarray(l["p2"]), score=l["score"]
        )
        for l in image_doc["lines"]
    ]
    size = image_doc.get("size")
    if size is not None:
        segs = metrics.scale_to_eval(segs, size, eval_resolution)
    return segs


def cmd_eval_sap(args):
    cfg = _cfg_for(args)
    if _maybe_print_config(args, cfg):
        return 0
    threshold = args.threshold if args.threshold is not None else cfg.sap.distance_threshold
    sap_cfg = metrics.SapConfig(
        distance_threshold=threshold, eval_resolution=cfg.sap.eval_resolution
    )
    pred_doc = json.loads(Path(args.pred).read_text())
    gt_doc = json.loads(Path(args.gt).read_text())
    images = pred_doc["images"] if isinstance(pred_doc, dict) else pred_doc
    anns = gt_doc["annotations"] if isinstance(gt_doc, dict) else gt_doc
    preds = [
        _segments_from_doc(img, sap_cfg.eval_resolution) for img in images
    ]
    gts = [
        Annotation(
            size=tuple(a["size"]),
            junctions=np.asarray(a["junctions"], dtype=np.float64).reshape(-1, 2),
            lines=np.asarray(a["lines"], dtype=np.int64).reshape(-1, 2),
        )
        for a in anns
    ]
    result = metrics.sap(preds, gts, sap_cfg, jobs=args.jobs)
    print(
        f"sAP@{result.threshold:g} ({result.eval_resolution[0]}x"
        f"{result.eval_resolution[1]}) = {result.ap:.4f}  "
        f"[{result.n_pred} predictions, {result.n_gt} gt lines]"
    )
    if args.csv:
        metrics.write_pr_csv(result, args.csv)
    return 0


def _quads_from_lines_doc(doc):
    quads = []
    for l in doc["lines"]:
        p1 = np.asarray(l["p1"], dtype=np.float64)
        p2 = np.asarray(l["p2"], dtype=np.float64)
        if np.array_equal(p1, p2):
            continue
        center = (p1 + p2) / 2.0
        shift = dec.canonical_shift((p2 - p1) / 2.0)
        quads.append(
            asm.Quadruplet(
                j1=center - shift, j2=center + shift, center=center,
                shift=shift, score=l.get("score", 1.0),
            )
        )
    return quads


def cmd_fuse3d(args):
    cfg = _cfg_for(args)
    if _maybe_print_config(args, cfg):
        return 0
    base = Path(args.frames).parent
    manifest = json.loads(Path(args.frames).read_text())
    observations = []
    for entry in manifest["frames"]:
        depth = read_grid(base / entry["depth"])
        frame = read_camera(base / entry["camera"], depth=depth)
        lines = ()
        if entry.get("lines"):
            lines = tuple(
                _quads_from_lines_doc(
                    json.loads((base / entry["lines"]).read_text())
                )
            )
        labels = None
        if entry.get("plane_labels"):
            labels = read_grid(base / entry["plane_labels"])
        observations.append(
            wireframe3d.FrameObservation(
                frame=frame, lines=lines, plane_labels=labels
            )
        )
    model = wireframe3d.fuse_sequence(observations, cfg.fusion)
    wireframe3d.write_wireframe_obj(model, args.out, args.sidecar)
    extents = wireframe3d.room_extents(model)
    print(
        f"{len(model.planes.planes)} planes, {len(model.creases)} merged "
        f"creases, {len(model.lines)} labeled lines"
    )
    print(
        f"room extents: {extents[0]:.3f} x {extents[1]:.3f} x "
        f"{extents[2]:.3f} m"
    )
    return 0


def cmd_gradcheck(args):
    cfg = _cfg_for(args)
    if _maybe_print_config(args, cfg):
        return 0
    rng = np.random.default_rng(cfg.seed)
    worst = 0.0
    for _ in range(args.graphs):
        for attempt in range(50):
            n_v = int(rng.integers(2, 7))
            feats, a = synth.random_line_features(rng, n_v, semantic_dim=12)
            labels = rng.integers(0, 2, n_v).astype(np.float64)
            model = gnn.init_model(
                12, d=8, n=2, hidden=8, seed=int(rng.integers(1 << 31))
            )
            if gnn.kink_margin(model, feats, a) > 1e-4:
                break
        errors = gnn.finite_difference_check(model, feats, a, labels)
        worst = max(worst, max(errors.values()))
    print(f"max relative gradient error over {args.graphs} graphs: {worst:.3e}")
    if worst > 1e-4:
        print("FAIL: exceeds 1e-4")
        return 1
    print("PASS")
    return 0


def cmd_train_toy(args):
    cfg = _cfg_for(args)
    if _maybe_print_config(args, cfg):
        return 0
    rng = np.random.default_rng(cfg.seed)
    if args.task == "parity":
        train = synth.parity_dataset(rng, args.graphs)
        test = synth.parity_dataset(rng, max(args.graphs // 3, 1))
    else:
        train = synth.separable_dataset(rng, args.graphs)
        test = synth.separable_dataset(rng, max(args.graphs // 3, 1))
    semantic_dim = len(train[0][0][0].semantic)
    model = gnn.init_model(
        semantic_dim, d=args.dim, n=args.layers, hidden=32, seed=cfg.seed
    )
    model, curve = gnn.train_toy(model, train, steps=args.steps, lr=args.lr)
    acc_train = gnn.accuracy(model, train)
    acc_test = gnn.accuracy(model, test)
    print(
        f"task={args.task} layers={args.layers} steps={args.steps} "
        f"final-loss={curve[-1]:.4f} train-acc={acc_train:.3f} "
        f"test-acc={acc_test:.3f}"
    )
    if args.out:
        gnn.save_model(model, args.out)
        print(f"weights saved to {args.out}")
    return 0


def _bench_fixture(seed):
    """A full-load synthetic image: 300 junctions, 300 surviving lines."""
    rng = np.random.default_rng(seed)
    junction_cells = [
        (3 + 6 * i, 4 + 8 * j) for j in range(15) for i in range(20)
    ]
    cell = {c: k for k, c in enumerate(junction_cells)}
    lines = []
    for j in range(15):
        for i in range(19):
            lines.append((cell[(3 + 6 * i, 4 + 8 * j)], cell[(3 + 6 * (i + 1), 4 + 8 * j)]))
    for j in range(14):
        lines.append((cell[(3, 4 + 8 * j)], cell[(3, 4 + 8 * (j + 1))]))
        if len(lines) < 300:
            lines.append(
                (cell[(3 + 6 * 19, 4 + 8 * j)], cell[(3 + 6 * 19, 4 + 8 * (j + 1))])
            )
        if len(lines) >= 300:
            break
    lines = lines[:300]
    junctions = np.array(
        [(4.0 * x + 2.0, 4.0 * y + 2.0) for x, y in junction_cells]
    )
    ann = Annotation(size=(512, 512), junctions=junctions, lines=lines)
    maps = supervision.make_gt_maps(ann, stride=4, sigma=1.0)
    grids = {
        "junction_heat": maps.junction_heat,
        "center_heat": maps.center_heat,
        "junction_offset": maps.junction_offset,
        "center_offset": maps.center_offset,
        "shift_vec": maps.shift,
    }
    features = Grid(
        rng.normal(size=(128, 128, 256)).astype(np.float32), role="features"
    )
    model = gnn.init_model(2048, d=256, n=3, hidden=32, seed=seed, dtype=np.float32)
    return grids, features, model


def bench_pipeline(cfg, repeats, seed):
    """Per-stage wall-clock stats for the post-backbone pipeline."""
    grids, features, model = _bench_fixture(seed)
    records = {"decode": [], "assemble": [], "pool": [], "score": []}
    totals = []

    def once(store):
        t0 = time.perf_counter()
        junctions, centers, shifts = _decode_all(grids, cfg)
        t1 = time.perf_counter()
        proposals = asm.make_proposals(
            centers, shifts, [c.score for c in centers]
        )
        kept, _ = asm.match_endpoints(proposals, junctions, cfg.assemble.theta)
        graph = asm.build_graph(kept)
        t2 = time.perf_counter()
        feats = loipool.pool_many(
            features, graph.vertices, cfg.pool, cfg.decode.output_stride
        )
        t3 = time.perf_counter()
        scores = gnn.forward(model, feats, graph.adjacency)
        t4 = time.perf_counter()
        if store:
            records["decode"].append((t1 - t0) * 1e3)
            records["assemble"].append((t2 - t1) * 1e3)
            records["pool"].append((t3 - t2) * 1e3)
            records["score"].append((t4 - t3) * 1e3)
            totals.append((t4 - t0) * 1e3)
        return len(scores)

    n_lines = once(store=False)  # warmup
    for _ in range(repeats):
        once(store=True)
    rows = []
    for stage in ("decode", "assemble", "pool", "score"):
        xs = records[stage]
        rows.append(
            {
                "stage": stage,
                "median_ms": statistics.median(xs),
                "p95_ms": float(np.percentile(xs, 95)),
                "repeats": repeats,
            }
        )
    rows.append(
        {
            "stage": "end_to_end",
            "median_ms": statistics.median(totals),
            "p95_ms": float(np.percentile(totals, 95)),
            "repeats": repeats,
        }
    )
    return rows, n_lines


def cmd_bench(args):
    cfg = _cfg_for(args)
    if _maybe_print_config(args, cfg):
        return 0
    rows, n_lines = bench_pipeline(cfg, args.repeats, cfg.seed)
    low_confidence = args.repeats < 2
    if low_confidence:
        print("warning: single repeat, figures are low-confidence")
    print(f"synthetic load: 300 junctions, 300 centers, {n_lines} scored lines")
    for row in rows:
        print(
            f"{row['stage']:>10}: median {row['median_ms']:8.3f} ms   "
            f"p95 {row['p95_ms']:8.3f} ms"
        )
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            writer = csv.DictWriter(
                fh,
                fieldnames=["stage", "median_ms", "p95_ms", "repeats",
                            "low_confidence"],
            )
            writer.writeheader()
            for row in rows:
                writer.writerow({**row, "low_confidence": int(low_confidence)})
    return 0


def _add_common(p):
    p.add_argument("--config", help=f"config JSON (fallback: ${ENV_VAR})")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument(
        "--print-config", action="store_true",
        help="print the effective config and exit",
    )


def build_parser():
    parser = argparse.ArgumentParser(
        prog="wkit",
        description="wireframe parsing: decode, assemble, score, evaluate, fuse",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decode", help="heatmaps to keypoint JSON")
    p.add_argument("--heat", action="append", default=[], help="heatmap grid (repeat)")
    p.add_argument("--offset", action="append", default=[], help="offset grid (repeat)")
    p.add_argument("--shift", help="shift-vector grid")
    p.add_argument("--out", help="output JSON (default stdout)")
    _add_common(p)
    p.set_defaults(fn=cmd_decode)

    p = sub.add_parser("assemble", help="keypoints to candidate-graph JSON")
    p.add_argument("--keypoints", required=True)
    p.add_argument("--out")
    _add_common(p)
    p.set_defaults(fn=cmd_assemble)

    p = sub.add_parser("score", help="re-score a graph with the relation model")
    p.add_argument("--graph", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--weights", help="weight directory (manifest.json + tensors)")
    p.add_argument("--out")
    _add_common(p)
    p.set_defaults(fn=cmd_score)

    p = sub.add_parser("detect", help="full pipeline: maps to scored lines")
    p.add_argument("--heat", action="append", default=[])
    p.add_argument("--offset", action="append", default=[])
    p.add_argument("--shift")
    p.add_argument("--features")
    p.add_argument("--weights")
    p.add_argument("--manifest", help="batch mode: JSON list of per-image inputs")
    p.add_argument("--jobs", type=int, default=1, help="parallel images (manifest mode)")
    p.add_argument("--out")
    _add_common(p)
    p.set_defaults(fn=cmd_detect)

    p = sub.add_parser("make-gt", help="annotation to ground-truth maps")
    p.add_argument("--ann", required=True)
    p.add_argument("--stride", type=int)
    p.add_argument("--sigma", type=float)
    p.add_argument("--out-dir", required=True)
    _add_common(p)
    p.set_defaults(fn=cmd_make_gt)

    p = sub.add_parser("eval-sap", help="structural AP of predictions vs GT")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--threshold", type=float)
    p.add_argument("--csv", help="write the PR curve here")
    p.add_argument("--jobs", type=int, default=1, help="parallel images")
    _add_common(p)
    p.set_defaults(fn=cmd_eval_sap)

    p = sub.add_parser("fuse3d", help="fuse RGBD frames + lines into a wireframe")
    p.add_argument("--frames", required=True, help="frame manifest JSON")
    p.add_argument("--out", required=True, help="output OBJ")
    p.add_argument("--sidecar", help="output JSON sidecar")
    _add_common(p)
    p.set_defaults(fn=cmd_fuse3d)

    p = sub.add_parser("gradcheck", help="finite-difference gradient check")
    p.add_argument("--graphs", type=int, default=5)
    _add_common(p)
    p.set_defaults(fn=cmd_gradcheck)

    p = sub.add_parser("train-toy", help="desk-scale relation-model training")
    p.add_argument("--task", choices=("parity", "separable"), default="parity")
    p.add_argument("--layers", type=int, default=3)
    p.add_argument("--dim", type=int, default=16)
    p.add_argument("--graphs", type=int, default=60)
    p.add_argument("--steps", type=int, default=800)
    p.add_argument("--lr", type=float, default=0.3)
    p.add_argument("--out", help="save trained weights to this directory")
    _add_common(p)
    p.set_defaults(fn=cmd_train_toy)

    p = sub.add_parser("bench", help="latency of the post-backbone pipeline")
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--csv", help="write per-stage stats here")
    _add_common(p)
    p.set_defaults(fn=cmd_bench)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except StageError as exc:
        print(f"error in {exc}", file=sys.stderr)
        cause = exc.cause
        if isinstance(cause, NumericError):
            return 4
        if isinstance(cause, OSError):
            return 3
        return 2
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 4
    except (ValidationError, ContractError, FormatError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

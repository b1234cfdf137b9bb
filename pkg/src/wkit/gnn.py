"""Relational re-scoring of candidate lines with a residual GCN.

Semantic and geometric line features are embedded separately, passed
through n residual graph-convolution layers over the shared normalized
adjacency (two parallel streams, no cross-mixing), concatenated, and
scored by a small MLP head with a sigmoid.

All math is plain numpy; backward() returns analytic gradients of the
mean binary cross-entropy, derived by hand and checked against finite
differences in the test suite.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .tensorio import ContractError, FormatError, Grid, NumericError, read_grid, write_grid


@dataclass(frozen=True)
class GnnModel:
    """Embedding, layer, and head weights. Immutable; updates copy."""

    phi_w1: np.ndarray  # semantic_dim x d
    phi_b1: np.ndarray
    phi_w2: np.ndarray  # d x d
    phi_b2: np.ndarray
    psi_w: np.ndarray  # 4 x d, no bias
    ws: tuple  # n matrices d x d, semantic stream
    wg: tuple  # n matrices d x d, geometric stream
    head_w1: np.ndarray  # 2d x hidden
    head_b1: np.ndarray
    head_w2: np.ndarray  # hidden x 1
    head_b2: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "ws", tuple(self.ws))
        object.__setattr__(self, "wg", tuple(self.wg))
        d = self.d
        checks = {
            "phi_w1": (self.semantic_dim, d),
            "phi_b1": (d,),
            "phi_w2": (d, d),
            "phi_b2": (d,),
            "psi_w": (4, d),
            "head_w1": (2 * d, self.hidden),
            "head_b1": (self.hidden,),
            "head_w2": (self.hidden, 1),
            "head_b2": (1,),
        }
        for name, shape in checks.items():
            got = getattr(self, name).shape
            if got != shape:
                raise ContractError(f"{name} has shape {got}, expected {shape}")
        if len(self.ws) != len(self.wg):
            raise ContractError("ws and wg must hold the same number of layers")
        for i, (a, b) in enumerate(zip(self.ws, self.wg)):
            if a.shape != (d, d) or b.shape != (d, d):
                raise ContractError(f"layer {i} weights must be {d}x{d}")

    @property
    def semantic_dim(self):
        return self.phi_w1.shape[0]

    @property
    def d(self):
        return self.phi_w1.shape[1]

    @property
    def n(self):
        return len(self.ws)

    @property
    def hidden(self):
        return self.head_w1.shape[1]

    def tensors(self):
        """(name, array) pairs in a fixed order."""
        items = [
            ("phi_w1", self.phi_w1),
            ("phi_b1", self.phi_b1),
            ("phi_w2", self.phi_w2),
            ("phi_b2", self.phi_b2),
            ("psi_w", self.psi_w),
        ]
        for i, w in enumerate(self.ws):
            items.append((f"ws{i}", w))
        for i, w in enumerate(self.wg):
            items.append((f"wg{i}", w))
        items += [
            ("head_w1", self.head_w1),
            ("head_b1", self.head_b1),
            ("head_w2", self.head_w2),
            ("head_b2", self.head_b2),
        ]
        return items

    def updated(self, deltas, scale):
        """New model with each tensor t replaced by t + scale * deltas[name]."""
        new = {name: arr + scale * deltas[name] for name, arr in self.tensors()}
        return model_from_tensors(new, n=self.n)


def model_from_tensors(tensors, n):
    ws = tuple(tensors[f"ws{i}"] for i in range(n))
    wg = tuple(tensors[f"wg{i}"] for i in range(n))
    return GnnModel(
        phi_w1=tensors["phi_w1"],
        phi_b1=tensors["phi_b1"],
        phi_w2=tensors["phi_w2"],
        phi_b2=tensors["phi_b2"],
        psi_w=tensors["psi_w"],
        ws=ws,
        wg=wg,
        head_w1=tensors["head_w1"],
        head_b1=tensors["head_b1"],
        head_w2=tensors["head_w2"],
        head_b2=tensors["head_b2"],
    )


def _glorot(rng, fan_in, fan_out, dtype):
    a = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-a, a, size=(fan_in, fan_out)).astype(dtype)


def init_model(semantic_dim, d=256, n=3, hidden=32, seed=0, dtype=np.float64):
    """Glorot-uniform weights, zero biases, deterministic in the seed."""
    rng = np.random.default_rng(seed)
    z = lambda *shape: np.zeros(shape, dtype=dtype)
    return GnnModel(
        phi_w1=_glorot(rng, semantic_dim, d, dtype),
        phi_b1=z(d),
        phi_w2=_glorot(rng, d, d, dtype),
        phi_b2=z(d),
        psi_w=_glorot(rng, 4, d, dtype),
        ws=tuple(_glorot(rng, d, d, dtype) for _ in range(n)),
        wg=tuple(_glorot(rng, d, d, dtype) for _ in range(n)),
        head_w1=_glorot(rng, 2 * d, hidden, dtype),
        head_b1=z(hidden),
        head_w2=_glorot(rng, hidden, 1, dtype),
        head_b2=z(1),
    )


def constant_score_model(semantic_dim, d=256, n=3, hidden=32, logit=2.0, dtype=np.float64):
    """All-zero weights except a head bias: every line scores sigmoid(logit).

    Useful as oracle-favoring weights when candidates are trusted upstream.
    """
    z = lambda *shape: np.zeros(shape, dtype=dtype)
    return GnnModel(
        phi_w1=z(semantic_dim, d),
        phi_b1=z(d),
        phi_w2=z(d, d),
        phi_b2=z(d),
        psi_w=z(4, d),
        ws=tuple(z(d, d) for _ in range(n)),
        wg=tuple(z(d, d) for _ in range(n)),
        head_w1=z(2 * d, hidden),
        head_b1=z(hidden),
        head_w2=z(hidden, 1),
        head_b2=np.full((1,), logit, dtype=dtype),
    )


def normalize_adjacency(a):
    """D^{-1/2} (A + I) D^{-1/2} with D the row sums of A + I."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ContractError(f"adjacency must be square, got {a.shape}")
    if not np.array_equal(a, a.T):
        raise ContractError("adjacency must be symmetric")
    if np.any(np.diag(a) != 0):
        raise ContractError("adjacency diagonal must be zero")
    at = a + np.eye(a.shape[0])
    deg = at.sum(axis=1)
    return at / np.sqrt(np.outer(deg, deg))


def gcn_layer(x, norm_adj, w):
    """ReLU(norm_adj @ x @ w) + x, the residual graph-convolution step."""
    x = np.asarray(x)
    if x.ndim != 2 or norm_adj.shape != (x.shape[0], x.shape[0]):
        raise ContractError(
            f"norm_adj {norm_adj.shape} does not match vertex count {x.shape}"
        )
    if w.shape != (x.shape[1], x.shape[1]):
        raise ContractError(f"layer weight {w.shape} does not match width {x.shape[1]}")
    return np.maximum(norm_adj @ x @ w, 0.0) + x


def _stack_features(features, dtype):
    xs = np.stack([np.asarray(f.semantic, dtype=dtype) for f in features])
    xp = np.stack([np.asarray(f.geometric, dtype=dtype) for f in features])
    return xs, xp


def _forward_pass(model, xs, xp, a):
    """Forward with every intermediate kept for the backward pass."""
    norm = normalize_adjacency(a).astype(xs.dtype)
    z_phi = xs @ model.phi_w1 + model.phi_b1
    a_phi = np.maximum(z_phi, 0.0)
    e = a_phi @ model.phi_w2 + model.phi_b2
    g = xp @ model.psi_w
    es, gs, ems, gms = [e], [g], [], []
    for ws_l, wg_l in zip(model.ws, model.wg):
        em = norm @ es[-1] @ ws_l
        gm = norm @ gs[-1] @ wg_l
        ems.append(em)
        gms.append(gm)
        es.append(np.maximum(em, 0.0) + es[-1])
        gs.append(np.maximum(gm, 0.0) + gs[-1])
    h = np.concatenate([es[-1], gs[-1]], axis=1)
    z1 = h @ model.head_w1 + model.head_b1
    a1 = np.maximum(z1, 0.0)
    logit = (a1 @ model.head_w2 + model.head_b2)[:, 0]
    return {
        "norm": norm, "z_phi": z_phi, "a_phi": a_phi,
        "es": es, "gs": gs, "ems": ems, "gms": gms,
        "h": h, "z1": z1, "a1": a1, "logit": logit,
    }


def forward(model, features, a):
    """Score every vertex in [0, 1]; empty graphs score nothing."""
    if not len(features):
        return np.zeros(0, dtype=np.float64)
    a = np.asarray(a)
    if a.shape[0] != len(features):
        raise ContractError(
            f"{len(features)} feature rows for a {a.shape} adjacency"
        )
    xs, xp = _stack_features(features, model.phi_w1.dtype)
    if xs.shape[1] != model.semantic_dim:
        raise ContractError(
            f"semantic width {xs.shape[1]} does not match model "
            f"({model.semantic_dim})"
        )
    cache = _forward_pass(model, xs, xp, np.asarray(a))
    return _sigmoid(cache["logit"])


def _sigmoid(z):
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _bce_from_logits(logit, labels):
    # softplus(z) - y*z, the stable form of -log p(y | z)
    sp = np.logaddexp(0.0, logit)
    return float(np.mean(sp - labels * logit))


def _backward_pass(model, cache, labels):
    n_v = len(labels)
    norm = cache["norm"]
    dlogit = (_sigmoid(cache["logit"]) - labels) / n_v

    da1 = dlogit[:, None] @ model.head_w2.T
    dz1 = da1 * (cache["z1"] > 0)
    grads = {
        "head_w2": cache["a1"].T @ dlogit[:, None],
        "head_b2": np.array([dlogit.sum()]),
        "head_w1": cache["h"].T @ dz1,
        "head_b1": dz1.sum(axis=0),
    }
    dh = dz1 @ model.head_w1.T
    d = model.d
    de = dh[:, :d].copy()
    dg = dh[:, d:].copy()

    for l in range(model.n - 1, -1, -1):
        dem = de * (cache["ems"][l] > 0)
        dgm = dg * (cache["gms"][l] > 0)
        grads[f"ws{l}"] = (norm @ cache["es"][l]).T @ dem
        grads[f"wg{l}"] = (norm @ cache["gs"][l]).T @ dgm
        de = de + norm.T @ dem @ model.ws[l].T
        dg = dg + norm.T @ dgm @ model.wg[l].T

    grads["phi_w2"] = cache["a_phi"].T @ de
    grads["phi_b2"] = de.sum(axis=0)
    da = de @ model.phi_w2.T
    dz = da * (cache["z_phi"] > 0)
    grads["phi_w1"] = cache["xs"].T @ dz
    grads["phi_b1"] = dz.sum(axis=0)
    grads["psi_w"] = cache["xp"].T @ dg
    return grads


def loss_and_grads(model, features, a, labels):
    """Mean-BCE loss and its gradient for every model tensor."""
    labels = np.asarray(labels, dtype=np.float64)
    if len(labels) != len(features):
        raise ContractError(
            f"{len(labels)} labels for {len(features)} vertices"
        )
    if not len(features):
        raise ContractError("cannot take gradients on an empty graph")
    xs, xp = _stack_features(features, np.float64)
    cache = _forward_pass(model, xs, xp, np.asarray(a))
    cache["xs"], cache["xp"] = xs, xp
    loss = _bce_from_logits(cache["logit"], labels)
    return loss, _backward_pass(model, cache, labels)


def backward(model, features, a, labels):
    return loss_and_grads(model, features, a, labels)[1]


def train_toy(model, dataset, steps, lr):
    """Full-batch gradient descent over a small in-memory dataset.

    Returns the trained model and a monotone-smoothed loss curve (the
    running minimum of the per-step mean loss). Deterministic: no
    shuffling, no stochastic batching.
    """
    if not dataset:
        raise ContractError("dataset must be nonempty")
    losses = []
    for step in range(steps):
        total = {name: np.zeros_like(arr) for name, arr in model.tensors()}
        loss_sum = 0.0
        for features, a, labels in dataset:
            loss, grads = loss_and_grads(model, features, a, labels)
            loss_sum += loss
            for name in total:
                total[name] += grads[name]
        mean_loss = loss_sum / len(dataset)
        if not np.isfinite(mean_loss):
            raise NumericError(f"loss became non-finite at step {step}")
        losses.append(mean_loss)
        if lr != 0.0:
            model = model.updated(total, -lr / len(dataset))
    return model, np.minimum.accumulate(np.asarray(losses, dtype=np.float64))


def kink_margin(model, features, a):
    """Smallest |pre-activation| seen in a forward pass.

    A margin near zero means some ReLU sits on its kink and the analytic
    subgradient there may legitimately disagree with finite differences;
    instance generators resample when this is tiny.
    """
    xs, xp = _stack_features(features, np.float64)
    cache = _forward_pass(model, xs, xp, np.asarray(a))
    pre = [cache["z_phi"], cache["z1"]] + cache["ems"] + cache["gms"]
    return min(float(np.abs(p).min()) for p in pre if p.size)


def finite_difference_check(model, features, a, labels, h=1e-5, scale_floor=1e-3):
    """Max relative error per tensor between analytic and central-difference
    gradients: |analytic - fd| / max(|analytic|, |fd|, scale_floor)."""
    _, grads = loss_and_grads(model, features, a, labels)

    def loss_at(m):
        return loss_and_grads(m, features, a, labels)[0]

    errors = {}
    for name, arr in model.tensors():
        worst = 0.0
        fd = np.zeros_like(arr)
        flat = arr.reshape(-1)
        for k in range(flat.size):
            delta = np.zeros_like(arr).reshape(-1)
            delta[k] = h
            bump = {n: np.zeros_like(t) for n, t in model.tensors()}
            bump[name] = delta.reshape(arr.shape)
            up = loss_at(model.updated(bump, 1.0))
            dn = loss_at(model.updated(bump, -1.0))
            fd.reshape(-1)[k] = (up - dn) / (2.0 * h)
        g = grads[name]
        denom = np.maximum(np.maximum(np.abs(g), np.abs(fd)), scale_floor)
        worst = float((np.abs(g - fd) / denom).max()) if g.size else 0.0
        errors[name] = worst
    return errors


def accuracy(model, dataset):
    """Fraction of vertices across the dataset scored on the right side of 0.5."""
    hits = 0
    count = 0
    for features, a, labels in dataset:
        scores = forward(model, features, a)
        hits += int(np.sum((scores > 0.5) == (np.asarray(labels) > 0.5)))
        count += len(labels)
    return hits / count if count else 0.0


def save_model(model, dirpath):
    """Manifest JSON plus one grid file per tensor."""
    dirpath = Path(dirpath)
    dirpath.mkdir(parents=True, exist_ok=True)
    manifest = {
        "semantic_dim": model.semantic_dim,
        "d": model.d,
        "n": model.n,
        "hidden": model.hidden,
        "tensors": {},
    }
    for name, arr in model.tensors():
        manifest["tensors"][name] = list(arr.shape)
        write_grid(Grid(arr, role="generic"), dirpath / f"{name}.wgt1")
    (dirpath / "manifest.json").write_text(json.dumps(manifest, indent=2))


def load_model(dirpath):
    dirpath = Path(dirpath)
    try:
        manifest = json.loads((dirpath / "manifest.json").read_text())
    except OSError as exc:
        raise OSError(f"reading model manifest from {dirpath}: {exc}") from exc
    tensors = {}
    for name, shape in manifest["tensors"].items():
        grid = read_grid(dirpath / f"{name}.wgt1")
        if list(grid.dims) != list(shape):
            raise FormatError(
                f"tensor {name} has dims {grid.dims}, manifest says {shape}"
            )
        tensors[name] = grid.data
    return model_from_tensors(tensors, n=int(manifest["n"]))

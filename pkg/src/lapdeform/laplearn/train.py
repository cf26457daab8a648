"""Training loop: SGD with momentum over shuffled shape mini-batches.

Targets come from a ground-truth assembly aligned index-for-index with the
input cloud: Laplacian entries and gate indicators on the sampled pairs,
inverse masses per point. Inverse-mass targets are divided by a dataset
constant (1.5x the largest training entry) so the sigmoid head can reach
them; the constant rides along in the checkpoint and is re-applied at
prediction time.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DivergedLoss
from ..fem import DiagMatrix, SparseSymMatrix, cotan_laplacian, inverse_mass, lumped_mass
from ..geometry import PointCloud, build_knn
from .network import encode, forward, kps, loss_and_grad
from .params import HEAD_HIDDEN, LapNetParams


@dataclass
class TrainConfig:
    lambda_w: float = 100.0
    lambda_minv: float = 1.0
    batch_size: int = 8
    lr: float = 0.1
    poly_power: float = 0.9
    epochs: int = 200
    seed: int = 0
    dropout: float = 0.1
    momentum: float = 0.9
    k: int = 32
    c_m: float | None = None  # None: 1.5 * max training inverse mass
    d: int = 64
    head_hidden: tuple = HEAD_HIDDEN
    # global gradient-norm clip; the gate term's weight makes the first raw
    # gradients enormous, and without batch norm unclipped SGD saturates
    # every sigmoid within a handful of steps
    clip_norm: float = 1.0
    # data-dependent initialization of the heads (see the _init helpers):
    # without them the class-imbalanced gate loss collapses all gates to
    # zero before the features can separate connected from unconnected pairs
    gate_probe_init: bool = True
    value_scale_init: bool = True


@dataclass
class ShapeSample:
    """One training shape with aligned targets on the KPS pattern."""

    points: np.ndarray
    neighbors: np.ndarray
    pairs: np.ndarray
    l_gt: np.ndarray
    w_gt: np.ndarray
    m_gt: np.ndarray  # inverse mass divided by the dataset scale

    @property
    def n(self):
        return self.points.shape[0]


def prepare_sample(cloud: PointCloud, gt_lap: SparseSymMatrix, gt_minv: DiagMatrix, k, c_m):
    knn = build_knn(cloud, k)
    pairs = kps(cloud, k)
    gt_map = gt_lap.entry_map()
    l_gt = np.array([gt_map.get((int(a), int(b)), 0.0) for a, b in pairs])
    w_gt = (np.abs(l_gt) > 1e-12).astype(np.float64)
    return ShapeSample(
        points=cloud.positions.copy(),
        neighbors=knn.neighbors.copy(),
        pairs=pairs,
        l_gt=l_gt,
        w_gt=w_gt,
        m_gt=gt_minv.values / c_m,
    )


def dataset_from_meshes(meshes):
    """(cloud, L_gt, Minv_gt) triples with the mesh vertices as the cloud."""
    out = []
    for mesh in meshes:
        lap = cotan_laplacian(mesh)
        minv = inverse_mass(lumped_mass(mesh))
        out.append((mesh.point_cloud(), lap, minv))
    return out


def kps_coverage(gt_lap: SparseSymMatrix, pairs):
    """Fraction of nonzero ground-truth off-diagonals captured by the KPS
    pattern. Entries outside the pattern are irrecoverable by the model and
    show up as error in downstream evaluation."""
    pattern = {(int(i), int(j)) for i, j in pairs}
    nonzero = [
        (int(i), int(j))
        for i, j, v in zip(gt_lap.rows, gt_lap.cols, gt_lap.values)
        if i != j and abs(v) > 1e-12
    ]
    if not nonzero:
        return 1.0
    covered = sum((ij in pattern) for ij in nonzero)
    return covered / len(nonzero)


def _dropout_masks(rng, rate, params, n_pairs, n_points):
    if rate <= 0:
        return None
    keep = 1.0 - rate
    h1, h2 = params.head_hidden
    masks = {}
    for head, rows in (("alpha", n_pairs), ("phi", n_pairs), ("omega", n_points)):
        m1 = (rng.random((rows, h1)) < keep) / keep
        m2 = (rng.random((rows, h2)) < keep) / keep
        masks[head] = (m1, m2)
    return masks


def _fold_feature_standardization(params, samples):
    """Rescale each head's first layer by training-set feature statistics.

    Equivalent to standardizing the pair/point features before the heads,
    but folded into the (trainable) first-layer weights so the architecture
    and checkpoint format stay unchanged. Purely an initialization step.
    """
    gs, xos = [], []
    for s in samples:
        f, _ = encode(s.points, s.neighbors, params)
        i, j = s.pairs[:, 0], s.pairs[:, 1]
        gs.append(np.concatenate([np.abs(s.points[i] - s.points[j]), f[i] * f[j]], axis=1))
        xos.append(np.concatenate([s.points, f], axis=1))
    g = np.concatenate(gs, axis=0)
    xo = np.concatenate(xos, axis=0)
    for head, feats in (("alpha", g), ("phi", g), ("omega", xo)):
        mu = feats.mean(axis=0)
        sd = feats.std(axis=0) + 1e-6
        w1 = params.views[f"{head}_w1"]
        b1 = params.views[f"{head}_b1"]
        w1[...] = w1 / sd[None, :]
        b1[...] = b1 - w1 @ mu


def _gate_probe_init(params, samples, scale=4.0, shift=10.0):
    """Point the gate head's first unit at a ridge separator of the pair
    features (targets +-1 from the gate labels).

    Starting the gate as a rough classifier balances the per-class gradient
    signs, which stops the majority-class mean gradient from marching every
    sigmoid into saturation before the features differentiate. Channel 0 of
    each layer carries the (shifted, LeakyReLU-linear) probe; all other
    channels keep their random init and everything remains trainable.
    Must run before the feature-standardization fold: the probe weights are
    expressed in standardized coordinates and the fold supplies them.
    """
    gs, ys = [], []
    for s in samples:
        f, _ = encode(s.points, s.neighbors, params)
        i, j = s.pairs[:, 0], s.pairs[:, 1]
        gs.append(np.concatenate([np.abs(s.points[i] - s.points[j]), f[i] * f[j]], axis=1))
        ys.append(2.0 * s.w_gt - 1.0)
    g = np.concatenate(gs)
    y = np.concatenate(ys)
    mu = g.mean(axis=0)
    sd = g.std(axis=0) + 1e-6
    gz = (g - mu) / sd
    w_lin = np.linalg.solve(gz.T @ gz + 1e-3 * len(gz) * np.eye(g.shape[1]), gz.T @ y)
    pv = params.views
    pv["alpha_w1"][0, :] = w_lin
    pv["alpha_b1"][0] = shift
    pv["alpha_w2"][0, :] *= 0.05
    pv["alpha_w2"][0, 0] = 1.0
    pv["alpha_b2"][0] = 0.0
    pv["alpha_w3"][0, :] *= 0.05
    pv["alpha_w3"][0, 0] = scale
    pv["alpha_b3"][0] = -shift * scale


def _value_scale_init(params, samples):
    """Rescale the value head's output layer to the target magnitude.

    Raw init produces values of order 1 while Laplacian entries sit around
    1e-2; matching scales up front saves most of the optimizer's budget,
    which the heavily weighted gate term would otherwise monopolize under
    the gradient-norm clip. Runs after the standardization fold.
    """
    spread, target = [], []
    for s in samples:
        out, _ = forward(params, s.points, s.neighbors, s.pairs)
        spread.append(np.abs(out["values"]))
        target.append(np.abs(s.l_gt))
    factor = float(np.concatenate(target).mean() / max(np.concatenate(spread).mean(), 1e-12))
    params.views["phi_w3"][...] *= factor
    params.views["phi_b3"][...] *= factor


@dataclass
class TrainResult:
    params: LapNetParams
    c_m: float
    history: list = field(default_factory=list)
    best_epoch: int = -1
    best_loss: float = np.inf


def train(dataset, config: TrainConfig) -> TrainResult:
    """Train on (cloud, L_gt, Minv_gt) triples; returns the best checkpoint.

    Deterministic for a fixed config and seed: shape shuffling and dropout
    masks come from one seeded generator consumed in a fixed order.
    """
    if not dataset:
        raise ValueError("empty training dataset")
    if config.c_m is not None:
        c_m = float(config.c_m)
    else:
        c_m = 1.5 * max(float(minv.values.max()) for _, _, minv in dataset)
    samples = [prepare_sample(cloud, lap, minv, config.k, c_m) for cloud, lap, minv in dataset]

    params = LapNetParams(config.d, config.head_hidden, seed=config.seed)
    if config.gate_probe_init:
        _gate_probe_init(params, samples)
    _fold_feature_standardization(params, samples)
    if config.value_scale_init:
        _value_scale_init(params, samples)
    velocity = np.zeros(params.size)
    rng = np.random.default_rng(config.seed)

    n_shapes = len(samples)
    batch = max(1, min(config.batch_size, n_shapes))
    n_batches = (n_shapes + batch - 1) // batch
    total_steps = max(1, config.epochs * n_batches)

    result = TrainResult(params=params.copy(), c_m=c_m)
    step = 0
    for epoch in range(config.epochs):
        order = rng.permutation(n_shapes)
        epoch_terms = np.zeros(4)
        for b in range(n_batches):
            members = order[b * batch : (b + 1) * batch]
            grad = np.zeros(params.size)
            batch_terms = np.zeros(4)
            for s in members:
                sample = samples[s]
                masks = _dropout_masks(rng, config.dropout, params, len(sample.pairs), sample.n)
                total, (lt, wt, mt), g = loss_and_grad(
                    params, sample, config.lambda_w, config.lambda_minv, masks
                )
                grad += g / len(members)
                batch_terms += np.array([total, lt, wt, mt]) / len(members)
            if not np.isfinite(batch_terms[0]):
                err = DivergedLoss(f"non-finite loss at epoch {epoch}")
                err.result = result
                raise err
            if config.clip_norm:
                norm = float(np.linalg.norm(grad))
                if norm > config.clip_norm:
                    grad *= config.clip_norm / norm
            lr_t = config.lr * (1.0 - step / total_steps) ** config.poly_power
            velocity = config.momentum * velocity - lr_t * grad
            params.flat += velocity
            step += 1
            epoch_terms += batch_terms * len(members) / n_shapes
        result.history.append(
            {
                "epoch": epoch,
                "total": float(epoch_terms[0]),
                "L_term": float(epoch_terms[1]),
                "W_term": float(epoch_terms[2]),
                "M_term": float(epoch_terms[3]),
            }
        )
        if epoch_terms[0] < result.best_loss and np.isfinite(params.flat).all():
            result.best_loss = float(epoch_terms[0])
            result.best_epoch = epoch
            result.params = params.copy()
    return result


def save_history_csv(history, path):
    with open(path, "w") as fh:
        fh.write("epoch,total,L_term,W_term,M_term\n")
        for row in history:
            fh.write(
                f"{row['epoch']},{row['total']:.17g},{row['L_term']:.17g},"
                f"{row['W_term']:.17g},{row['M_term']:.17g}\n"
            )

"""Forward and reverse-mode passes of the Laplacian learning network.

The network predicts, from a bare point cloud, the off-diagonal Laplacian
entries on KNN-sampled point pairs (as gate * value with a sigmoid gate
modeling the sparsity structure), plus a per-point inverse mass. Pair
features are built with symmetric aggregations (componentwise absolute
difference of positions, elementwise product of features) so both
orientations of a pair produce the same entry by construction.

Gradients are hand-written reverse mode over the flat parameter vector and
are validated against central finite differences in the test suite.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from ..errors import PatternMismatch, ShapeMismatch
from ..fem import DiagMatrix, SparseSymMatrix
from ..geometry import PointCloud, build_knn
from .params import LapNetParams

_SLOPE = 0.01  # LeakyReLU negative slope

# sigmoid preactivations are clamped so saturated gates stay strictly
# inside (0, 1): an exactly-zero gate would erase the matrix entry and can
# disconnect the predicted Laplacian's sparsity graph
_SIGMOID_CLAMP = 60.0
_ONE_MINUS_ULP = np.nextafter(1.0, 0.0)


def _bounded_sigmoid(z):
    return np.minimum(expit(np.clip(z, -_SIGMOID_CLAMP, _SIGMOID_CLAMP)), _ONE_MINUS_ULP)


def _lrelu(x):
    # equivalent to where(x > 0, x, slope * x) for slope < 1, but cheaper
    return np.maximum(x, _SLOPE * x)


def _lrelu_grad(x):
    return np.where(x > 0, 1.0, _SLOPE)


def kps(cloud: PointCloud, k: int = 32):
    """KNN-based point pair sampling: candidate pairs for nonzero entries.

    Returns a (p, 2) array of index pairs with i < j, deduplicated and
    sorted lexicographically.
    """
    knn = build_knn(cloud, k)
    n = cloud.n
    src = np.repeat(np.arange(n), knn.neighbors.shape[1])
    dst = knn.neighbors.ravel()
    i = np.minimum(src, dst)
    j = np.maximum(src, dst)
    pairs = np.unique(np.stack([i, j], axis=1), axis=0)
    return pairs


def pair_feature(p_i, p_j, f_i, f_j):
    """Symmetric pair feature (|p_i - p_j|, f_i * f_j); order-independent."""
    p_i = np.asarray(p_i, dtype=np.float64)
    p_j = np.asarray(p_j, dtype=np.float64)
    f_i = np.asarray(f_i, dtype=np.float64)
    f_j = np.asarray(f_j, dtype=np.float64)
    if f_i.shape != f_j.shape:
        raise ShapeMismatch("feature vectors must have equal dimension")
    return np.concatenate([np.abs(p_i - p_j), f_i * f_j])


def encode(points, neighbors, params: LapNetParams):
    """Per-point features: 3->64->64 MLP + mean-pooled neighborhood, 128->d.

    Returns (features, cache). Permutation-equivariant because the only
    cross-point operation is an order-free mean over KNN neighbors.
    """
    x = np.asarray(points, dtype=np.float64)
    nb = np.asarray(neighbors, dtype=np.int64)
    z1 = x @ params["enc_w1"].T + params["enc_b1"]
    h1 = _lrelu(z1)
    z2 = h1 @ params["enc_w2"].T + params["enc_b2"]
    h2 = _lrelu(z2)
    pooled = h2[nb].mean(axis=1) if nb.size else np.zeros_like(h2)
    c = np.concatenate([h2, pooled], axis=1)
    f = c @ params["enc_w3"].T + params["enc_b3"]
    cache = {"x": x, "nb": nb, "z1": z1, "h1": h1, "z2": z2, "h2": h2, "c": c}
    return f, cache


def _head_forward(x, params: LapNetParams, head, masks=None):
    t1 = x @ params[f"{head}_w1"].T + params[f"{head}_b1"]
    a1 = _lrelu(t1)
    if masks is not None:
        a1 = a1 * masks[0]
    t2 = a1 @ params[f"{head}_w2"].T + params[f"{head}_b2"]
    a2 = _lrelu(t2)
    if masks is not None:
        a2 = a2 * masks[1]
    t3 = a2 @ params[f"{head}_w3"].T + params[f"{head}_b3"]
    cache = {"x": x, "t1": t1, "a1": a1, "t2": t2, "a2": a2, "masks": masks}
    return t3[:, 0], cache


def _head_backward(d_t3, params: LapNetParams, head, cache, grads):
    x, t1, a1, t2, a2 = cache["x"], cache["t1"], cache["a1"], cache["t2"], cache["a2"]
    masks = cache["masks"]
    d_t3 = d_t3[:, None]
    grads[f"{head}_w3"] += d_t3.T @ a2
    grads[f"{head}_b3"] += d_t3.sum(axis=0)
    d_a2 = d_t3 @ params[f"{head}_w3"]
    if masks is not None:
        d_a2 = d_a2 * masks[1]
    d_t2 = d_a2 * _lrelu_grad(t2)
    grads[f"{head}_w2"] += d_t2.T @ a1
    grads[f"{head}_b2"] += d_t2.sum(axis=0)
    d_a1 = d_t2 @ params[f"{head}_w2"]
    if masks is not None:
        d_a1 = d_a1 * masks[0]
    d_t1 = d_a1 * _lrelu_grad(t1)
    grads[f"{head}_w1"] += d_t1.T @ x
    grads[f"{head}_b1"] += d_t1.sum(axis=0)
    return d_t1 @ params[f"{head}_w1"]


def predict_pair(g, params: LapNetParams):
    """Gate, raw value, and gated entry for pair feature(s) g."""
    g = np.atleast_2d(np.asarray(g, dtype=np.float64))
    gate = _bounded_sigmoid(_head_forward(g, params, "alpha")[0])
    value = _head_forward(g, params, "phi")[0]
    return gate, value, gate * value


def forward(params: LapNetParams, points, neighbors, pairs, masks=None):
    """Full network pass. Returns (outputs, caches).

    outputs: gates (p,), values (p,), entries (p,), m_hat (n,) where m_hat
    is the sigmoid inverse-mass prediction before any dataset rescale.
    """
    f, enc_cache = encode(points, neighbors, params)
    x = enc_cache["x"]
    i, j = pairs[:, 0], pairs[:, 1]
    dp = np.abs(x[i] - x[j])
    g = np.concatenate([dp, f[i] * f[j]], axis=1)
    mk = masks or {}
    za, alpha_cache = _head_forward(g, params, "alpha", mk.get("alpha"))
    zp, phi_cache = _head_forward(g, params, "phi", mk.get("phi"))
    gates = _bounded_sigmoid(za)
    values = zp
    xo = np.concatenate([x, f], axis=1)
    zo, omega_cache = _head_forward(xo, params, "omega", mk.get("omega"))
    m_hat = _bounded_sigmoid(zo)
    outputs = {"gates": gates, "values": values, "entries": gates * values, "m_hat": m_hat}
    caches = {
        "enc": enc_cache,
        "alpha": alpha_cache,
        "phi": phi_cache,
        "omega": omega_cache,
        "f": f,
        "pairs": pairs,
    }
    return outputs, caches


def loss_terms(entries, gates, m_hat, l_gt, w_gt, m_gt, lambda_w, lambda_minv):
    """Mean-L1 loss terms: (total, entry term, gate term, mass term)."""
    l_term = float(np.mean(np.abs(entries - l_gt))) if len(l_gt) else 0.0
    w_term = lambda_w * float(np.mean(np.abs(gates - w_gt))) if len(w_gt) else 0.0
    m_term = lambda_minv * float(np.mean(np.abs(m_hat - m_gt)))
    return l_term + w_term + m_term, l_term, w_term, m_term


def loss_value(params: LapNetParams, sample, lambda_w, lambda_minv, masks=None):
    """Loss only (no gradient); the cheap path for finite-difference probes."""
    out, _ = forward(params, sample.points, sample.neighbors, sample.pairs, masks)
    return loss_terms(
        out["entries"], out["gates"], out["m_hat"], sample.l_gt, sample.w_gt, sample.m_gt,
        lambda_w, lambda_minv,
    )[0]


def loss_and_grad(params: LapNetParams, sample, lambda_w, lambda_minv, masks=None):
    """Eq-style training loss and its exact reverse-mode gradient.

    `sample` carries points, neighbors, pairs, and the aligned targets
    (l_gt, w_gt per pair; m_gt per point, already divided by the dataset
    mass scale). Returns (total, (l_term, w_term, m_term), grad_flat).
    """
    out, caches = forward(params, sample.points, sample.neighbors, sample.pairs, masks)
    gates, values, entries, m_hat = out["gates"], out["values"], out["entries"], out["m_hat"]
    p = max(len(sample.pairs), 1)
    n = sample.points.shape[0]

    total, l_term, w_term, m_term = loss_terms(
        entries, gates, m_hat, sample.l_gt, sample.w_gt, sample.m_gt, lambda_w, lambda_minv
    )

    grad_holder = LapNetParams(params.d, params.head_hidden, flat=np.zeros(params.size))
    grads = grad_holder.views

    d_entries = np.sign(entries - sample.l_gt) / p
    d_gates = d_entries * values + lambda_w * np.sign(gates - sample.w_gt) / p
    d_values = d_entries * gates
    d_za = d_gates * gates * (1.0 - gates)
    d_zo = (lambda_minv * np.sign(m_hat - sample.m_gt) / n) * m_hat * (1.0 - m_hat)

    d_g = _head_backward(d_za, params, "alpha", caches["alpha"], grads)
    d_g += _head_backward(d_values, params, "phi", caches["phi"], grads)
    d_xo = _head_backward(d_zo, params, "omega", caches["omega"], grads)

    f = caches["f"]
    pairs = caches["pairs"]
    i, j = pairs[:, 0], pairs[:, 1]
    df = np.zeros_like(f)
    d_prod = d_g[:, 3:]
    np.add.at(df, i, d_prod * f[j])
    np.add.at(df, j, d_prod * f[i])
    df += d_xo[:, 3:]

    enc = caches["enc"]
    grads["enc_w3"] += df.T @ enc["c"]
    grads["enc_b3"] += df.sum(axis=0)
    dc = df @ params["enc_w3"]
    dh2 = dc[:, : params.views["enc_w2"].shape[0]].copy()
    dnbr = dc[:, params.views["enc_w2"].shape[0] :]
    nb = enc["nb"]
    if nb.size:
        kn = nb.shape[1]
        np.add.at(dh2, nb.ravel(), np.repeat(dnbr / kn, kn, axis=0))
    d_z2 = dh2 * _lrelu_grad(enc["z2"])
    grads["enc_w2"] += d_z2.T @ enc["h1"]
    grads["enc_b2"] += d_z2.sum(axis=0)
    dh1 = d_z2 @ params["enc_w2"]
    d_z1 = dh1 * _lrelu_grad(enc["z1"])
    grads["enc_w1"] += d_z1.T @ enc["x"]
    grads["enc_b1"] += d_z1.sum(axis=0)

    return total, (l_term, w_term, m_term), grad_holder.flat


@dataclass
class Prediction:
    """Predicted Laplacian (on the KPS pattern), gates, and inverse mass."""

    lap: SparseSymMatrix
    minv: DiagMatrix
    pairs: np.ndarray
    gates: np.ndarray
    values: np.ndarray
    m_hat: np.ndarray


def predict(cloud: PointCloud, params: LapNetParams, k=32, c_m=1.0, gate_threshold=None):
    """Assemble the predicted Laplacian and inverse mass for a cloud.

    Off-diagonals live on the KPS pattern only; the diagonal is minus the
    row sum, so the predicted matrix annihilates constants exactly. The
    inverse mass is the sigmoid output rescaled by the dataset constant.
    Optional hard gating zeroes entries whose gate falls below the
    threshold (off by default).
    """
    if cloud.n < 2:
        raise ShapeMismatch("prediction needs at least two points")
    pairs = kps(cloud, k)
    knn = build_knn(cloud, k)
    out, _ = forward(params, cloud.positions, knn.neighbors, pairs)
    entries = out["entries"]
    if gate_threshold is not None:
        entries = np.where(out["gates"] >= gate_threshold, entries, 0.0)
    n = cloud.n
    i, j = pairs[:, 0], pairs[:, 1]
    degree = np.zeros(n)
    np.add.at(degree, i, entries)
    np.add.at(degree, j, entries)
    rows = np.concatenate([i, np.arange(n)])
    cols = np.concatenate([j, np.arange(n)])
    vals = np.concatenate([entries, -degree])
    lap = SparseSymMatrix(n, rows, cols, vals)
    minv = DiagMatrix(out["m_hat"] * c_m, require_positive=True)
    return Prediction(lap, minv, pairs, out["gates"], out["values"], out["m_hat"])


def loss(pred: Prediction, gt_lap: SparseSymMatrix, gt_minv: DiagMatrix, lambda_w=100.0, lambda_minv=1.0):
    """Loss of a Prediction against ground truth on the prediction's pairs.

    Ground-truth entries absent from the KPS pattern count as zeros; the
    gate target is 1 where |L_gt| exceeds 1e-12. Returns (total, l_term,
    w_term, m_term).
    """
    if gt_lap.n != pred.minv.n or gt_minv.n != pred.minv.n:
        raise PatternMismatch("prediction and ground truth orders differ")
    gt_map = gt_lap.entry_map()
    l_gt = np.array([gt_map.get((int(a), int(b)), 0.0) for a, b in pred.pairs])
    w_gt = (np.abs(l_gt) > 1e-12).astype(np.float64)
    entries = pred.gates * pred.values
    return loss_terms(entries, pred.gates, pred.minv.values, l_gt, w_gt, gt_minv.values, lambda_w, lambda_minv)

"""Finite-difference gradient checking utilities.

Central differences are only a valid derivative oracle away from the kinks
of LeakyReLU and the L1 loss, so the fixture is constructed in the smooth
region: biases push every pre-activation well away from zero (on both
sides, so both LeakyReLU branches are exercised) and the targets are offset
from the initial predictions so no residual changes sign inside the
+-h probe window. The fixture margins are measured and asserted, not
assumed.

For speed, probing a head parameter re-evaluates only that head from the
perturbed layer onward against cached upstream activations; the unaffected
activations are bitwise identical to a full re-evaluation, which is
verified on a random subset of coordinates.
"""
from __future__ import annotations

import numpy as np
from lapdeform import PointCloud
from lapdeform.geometry import build_knn
from lapdeform.laplearn import LapNetParams
from lapdeform.laplearn.network import _bounded_sigmoid, _lrelu, forward, kps, loss_value
from lapdeform.laplearn.train import ShapeSample


def make_smooth_fixture(n_points=10, k=2, data_seed=0, param_seed=6):
    rng = np.random.default_rng(data_seed)
    pts = rng.uniform(-0.5, 0.5, (n_points, 3))
    cloud = PointCloud(pts)
    pairs = kps(cloud, k)
    knn = build_knn(cloud, k)

    params = LapNetParams(seed=param_seed)
    prng = np.random.default_rng(param_seed)
    for name, _ in params.shapes:
        view = params.views[name]
        if name.endswith(("b1", "b2")):
            view[...] = prng.choice([-1.5, 1.5], size=view.shape)
        elif name.endswith("b3"):
            view[...] = prng.choice([-1.0, 1.0], size=view.shape)
        else:
            view[...] = prng.normal(0.0, 0.05, size=view.shape)

    out, caches = forward(params, pts, knn.neighbors, pairs)
    l_gt = out["entries"] + prng.choice([-0.7, 0.7], size=len(pairs))
    w_gt = (out["gates"] > 0.5).astype(float)
    m_gt = np.clip(out["m_hat"] + prng.choice([-0.15, 0.15], size=n_points), 0.02, 0.98)
    sample = ShapeSample(pts, knn.neighbors.copy(), pairs, l_gt, w_gt, m_gt)

    margins = {
        "preact": min(
            float(np.abs(caches[h][key]).min())
            for h in ("alpha", "phi", "omega")
            for key in ("t1", "t2")
        ),
        "l_residual": float(np.abs(out["entries"] - l_gt).min()),
        "w_residual": float(np.abs(out["gates"] - w_gt).min()),
        "m_residual": float(np.abs(out["m_hat"] - m_gt).min()),
        "enc_preact": min(
            float(np.abs(caches["enc"]["z1"]).min()), float(np.abs(caches["enc"]["z2"]).min())
        ),
    }
    return params, sample, margins


def _coordinate_names(params):
    """Flat-index -> parameter-name mapping."""
    names = []
    for name, shape in params.shapes:
        names.extend([name] * int(np.prod(shape)))
    return names


class _IncrementalLoss:
    """loss(theta +- h e_i) via partial re-evaluation of the touched head."""

    def __init__(self, params, sample, lambda_w, lambda_minv):
        self.params = params
        self.sample = sample
        self.lw = lambda_w
        self.lm = lambda_minv
        out, caches = forward(params, sample.points, sample.neighbors, sample.pairs)
        self.caches = caches
        self.values = out["values"]
        self.gates = out["gates"]
        self.m_hat = out["m_hat"]
        p = len(sample.pairs)
        self.l_term = float(np.mean(np.abs(out["entries"] - sample.l_gt)))
        self.w_term = lambda_w * float(np.mean(np.abs(out["gates"] - sample.w_gt)))
        self.m_term = lambda_minv * float(np.mean(np.abs(out["m_hat"] - sample.m_gt)))

    def _head_t3(self, head, layer):
        pr = self.params
        cache = self.caches[head]
        if layer == 1:
            t1 = cache["x"] @ pr[f"{head}_w1"].T + pr[f"{head}_b1"]
            a1 = _lrelu(t1)
            t2 = a1 @ pr[f"{head}_w2"].T + pr[f"{head}_b2"]
            a2 = _lrelu(t2)
        elif layer == 2:
            t2 = cache["a1"] @ pr[f"{head}_w2"].T + pr[f"{head}_b2"]
            a2 = _lrelu(t2)
        else:
            a2 = cache["a2"]
        return (a2 @ pr[f"{head}_w3"].T + pr[f"{head}_b3"])[:, 0]

    def eval_for(self, name):
        """Loss with the parameter array `name` at its current (perturbed)
        values, everything upstream cached."""
        if name.startswith("enc"):
            return loss_value(self.params, self.sample, self.lw, self.lm)
        head, layer_tag = name.split("_")
        layer = int(layer_tag[1])
        t3 = self._head_t3(head, layer)
        s = self.sample
        if head == "alpha":
            gates = _bounded_sigmoid(t3)
            entries = gates * self.values
            l_term = float(np.mean(np.abs(entries - s.l_gt)))
            w_term = self.lw * float(np.mean(np.abs(gates - s.w_gt)))
            return l_term + w_term + self.m_term
        if head == "phi":
            entries = self.gates * t3
            l_term = float(np.mean(np.abs(entries - s.l_gt)))
            return l_term + self.w_term + self.m_term
        m_hat = _bounded_sigmoid(t3)
        m_term = self.lm * float(np.mean(np.abs(m_hat - s.m_gt)))
        return self.l_term + self.w_term + m_term


def fd_gradient(params, sample, lambda_w, lambda_minv, h=1e-5, indices=None, verify=300, verify_seed=0):
    """Central-difference gradient for the given coordinates (default: all).

    Cross-checks the incremental evaluation against the full loss on a
    random coordinate subset before trusting it. Returns an array aligned
    with `indices`.
    """
    inc = _IncrementalLoss(params, sample, lambda_w, lambda_minv)
    names = _coordinate_names(params)
    flat = params.flat
    if indices is None:
        indices = np.arange(params.size)
    indices = np.asarray(indices)
    fd = np.empty(indices.size)

    rng = np.random.default_rng(verify_seed)
    verify_idx = set(rng.choice(indices, size=min(verify, indices.size), replace=False).tolist())
    for row, i in enumerate(indices):
        name = names[i]
        orig = flat[i]
        flat[i] = orig + h
        lp = inc.eval_for(name)
        if int(i) in verify_idx:
            full = loss_value(params, sample, lambda_w, lambda_minv)
            assert abs(lp - full) <= 1e-14 * max(1.0, abs(full)), (i, name, lp, full)
        flat[i] = orig - h
        lm_ = inc.eval_for(name)
        flat[i] = orig
        fd[row] = (lp - lm_) / (2.0 * h)
    return fd

"""Quantitative comparison of predicted vs ground-truth deformation weights
and of the deformed shapes they produce."""
from __future__ import annotations

import numpy as np

from .bbw import solve_bbw
from .deform import AffineTransform, handles_from_fps, lbs_deform
from .errors import DimensionMismatch
from .fem import cotan_laplacian, deformation_energy, inverse_mass, lumped_mass
from .geometry import PointCloud, TetMesh
from .pcl import knn_graph_laplacian
from .validation import check_same_order


def weight_l1(w_pred, w_gt):
    """Mean absolute difference over all n*m weight entries."""
    a = np.asarray(w_pred, dtype=np.float64)
    b = np.asarray(w_gt, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch(f"weight shapes differ: {a.shape} vs {b.shape}")
    return float(np.mean(np.abs(a - b)))


def _min_sq_dists(p, q):
    d2 = np.sum((p[:, None, :] - q[None, :, :]) ** 2, axis=2)
    return d2.min(axis=1)


def chamfer(p: PointCloud, q: PointCloud):
    """Symmetric Chamfer distance in the squared-distance convention."""
    a, b = p.positions, q.positions
    return float(np.mean(_min_sq_dists(a, b)) + np.mean(_min_sq_dists(b, a)))


def hausdorff(p: PointCloud, q: PointCloud):
    """Max of the two directed max-min Euclidean distances."""
    a, b = p.positions, q.positions
    d_ab = np.sqrt(np.max(_min_sq_dists(a, b)))
    d_ba = np.sqrt(np.max(_min_sq_dists(b, a)))
    return float(max(d_ab, d_ba))


def _energy_from_source(cloud, model, gt_lap, gt_minv):
    if model == "oracle":
        return deformation_energy(gt_lap, gt_minv)
    if isinstance(model, tuple) and model and model[0] == "baseline":
        lap, mass = knn_graph_laplacian(cloud, k=model[1])
        return deformation_energy(lap, inverse_mass(mass))
    if hasattr(model, "predict"):
        pred = model.predict(cloud)
        return deformation_energy(pred.lap, pred.minv)
    raise DimensionMismatch(f"unrecognized model source: {model!r}")


def eval_pipeline(
    cloud: PointCloud,
    gt_mesh: TetMesh,
    model,
    handle_count=16,
    n_deformations=4,
    seed=0,
    tol=1e-8,
):
    """Weight L1 plus shape CD/HD over random handle translations.

    Ground-truth weights come from the FEM assembly on ``gt_mesh`` (whose
    vertices must align index-for-index with ``cloud``); predicted weights
    come from ``model``: the string "oracle", a ("baseline", k) tuple, or a
    fitted predictor with a ``predict(cloud)`` method. Handles are placed
    by farthest point sampling; each deformation translates every handle by
    a seeded uniform draw from [-0.2, 0.2]^3.
    """
    check_same_order(cloud.n, gt_mesh.n, "cloud and ground-truth mesh")
    gt_lap = cotan_laplacian(gt_mesh)
    gt_minv = inverse_mass(lumped_mass(gt_mesh))
    handles = handles_from_fps(cloud, handle_count, seed=seed)

    a_gt = deformation_energy(gt_lap, gt_minv)
    w_gt, _ = solve_bbw(a_gt, handles, tol=tol)
    a_pred = _energy_from_source(cloud, model, gt_lap, gt_minv)
    w_pred, _ = solve_bbw(a_pred, handles, tol=tol)

    report = {
        "weight_l1": weight_l1(w_pred, w_gt),
        "per_seed": [],
    }
    cds, hds = [], []
    for s in range(n_deformations):
        rng = np.random.default_rng([seed, s])
        transforms = [
            AffineTransform.translate(rng.uniform(-0.2, 0.2, size=3))
            for _ in range(handles.m)
        ]
        deformed_gt = lbs_deform(cloud, w_gt, transforms)
        deformed_pred = lbs_deform(cloud, w_pred, transforms)
        cd = chamfer(deformed_pred, deformed_gt)
        hd = hausdorff(deformed_pred, deformed_gt)
        cds.append(cd)
        hds.append(hd)
        report["per_seed"].append({"seed": s, "cd": cd, "hd": hd})
    report["shape_cd"] = float(np.mean(cds))
    report["shape_hd"] = float(np.mean(hds))
    return report


def report_csv_row(report, label=""):
    """One aggregation-friendly CSV line: label,weight_l1,shape_cd,shape_hd."""
    return f"{label},{report['weight_l1']:.17g},{report['shape_cd']:.17g},{report['shape_hd']:.17g}"

"""Independent oracles the test suite checks the implementation against.

Everything here is deliberately written from first principles with
different formulas/algorithms than the package code: brute-force KNN,
the per-edge cotangent-weight Laplacian assembly (vs hat gradients),
and exhaustive active-set enumeration for small box-constrained QPs.
"""
from __future__ import annotations

import itertools

import numpy as np


def brute_knn(points, k):
    """All-pairs distance sort; ties by ascending index."""
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    k = min(k, n - 1)
    out = []
    for i in range(n):
        cand = []
        for j in range(n):
            if j == i:
                continue
            cand.append((float(np.linalg.norm(pts[i] - pts[j])), j))
        cand.sort()
        out.append([j for _, j in cand[:k]])
    return out


def _dihedral_cot(verts, k, l, i, j):
    """cot of the dihedral angle at edge (k, l) of tet {i, j, k, l}."""
    b = verts[l] - verts[k]
    bhat = b / np.linalg.norm(b)
    u = verts[i] - verts[k]
    w = verts[j] - verts[k]
    u_perp = u - np.dot(u, bhat) * bhat
    w_perp = w - np.dot(w, bhat) * bhat
    cross = np.linalg.norm(np.cross(u_perp, w_perp))
    return float(np.dot(u_perp, w_perp) / cross)


def cotan_form_laplacian(verts, tets):
    """Per-edge cotangent-weight assembly: w_ij = sum_t l_opp cot(theta_opp)/6.

    Returns a dense symmetric matrix with zero row sums; independent of the
    hat-gradient stiffness assembly used by the package.
    """
    verts = np.asarray(verts, dtype=float)
    tets = np.asarray(tets, dtype=int)
    n = len(verts)
    lap = np.zeros((n, n))
    # edge (a, b) paired with its opposite edge (c, d) in each tet
    edge_pairs = [
        ((0, 1), (2, 3)),
        ((0, 2), (1, 3)),
        ((0, 3), (1, 2)),
        ((1, 2), (0, 3)),
        ((1, 3), (0, 2)),
        ((2, 3), (0, 1)),
    ]
    for tet in tets:
        for (a, b), (c, d) in edge_pairs:
            i, j = tet[a], tet[b]
            k, l = tet[c], tet[d]
            length_opp = np.linalg.norm(verts[k] - verts[l])
            w = length_opp * _dihedral_cot(verts, k, l, i, j) / 6.0
            lap[i, j] += w
            lap[j, i] += w
    np.fill_diagonal(lap, 0.0)
    np.fill_diagonal(lap, -lap.sum(axis=1))
    return lap


def enumerate_box_qp(a, pinned, pinned_values, feas_tol=1e-9):
    """Global minimizer of 0.5 w^T A w with pins and 0 <= w <= 1 by
    exhaustively assigning every free variable to {interior, at 0, at 1}.

    The optimal active set appears among the assignments and every
    candidate is feasible, so the lowest-objective candidate is the global
    minimum. Only viable for ~12 or fewer free variables.
    """
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    pinned = list(pinned)
    pin_set = set(pinned)
    free_all = [i for i in range(n) if i not in pin_set]
    best_obj, best_w = np.inf, None
    for assign in itertools.product((0, 1, 2), repeat=len(free_all)):
        w = np.zeros(n)
        w[pinned] = pinned_values
        interior = [v for v, s in zip(free_all, assign) if s == 0]
        for v, s in zip(free_all, assign):
            if s == 2:
                w[v] = 1.0
        if interior:
            fixed = np.array([i for i in range(n) if i not in interior])
            sub = a[np.ix_(interior, interior)]
            rhs = -a[np.ix_(interior, fixed)] @ w[fixed]
            try:
                sol = np.linalg.solve(sub, rhs)
            except np.linalg.LinAlgError:
                continue
            if not np.isfinite(sol).all():
                continue
            if sol.min() < -feas_tol or sol.max() > 1 + feas_tol:
                continue
            w[interior] = sol
        obj = 0.5 * w @ a @ w
        if obj < best_obj:
            best_obj, best_w = obj, w
    return best_w, best_obj

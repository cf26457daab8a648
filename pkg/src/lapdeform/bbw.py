"""Bounded biharmonic weights via a primal active-set QP per handle.

For each handle k the solver minimizes 0.5 w^T A w subject to w = 1 on the
handle's vertices, w = 0 on every other handle, and box bounds 0 <= w <= 1.
Rows of the stacked weight matrix are normalized to sum to one afterwards.

The active-set loop: eliminate pinned variables, then repeatedly solve the
free-variable system (A_ff + reg I) w_f = -A_fc w_c by Cholesky, clamp the
most-violating free variable to its bound, and release the bound variable
with the most negative multiplier, until the KKT residual drops below tol.
Ties always break toward the lowest vertex index so runs are reproducible.
"""
from __future__ import annotations

import time
from collections import namedtuple
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.csgraph as csgraph

from .errors import Disconnected, DimensionMismatch, MaxIterations, NotPSD
from .fem import SparseSymMatrix

_FREE, _LOWER, _UPPER, _PINNED = 0, 1, 2, 3

BoundViolation = namedtuple("BoundViolation", "vertex handle value")
PartitionViolation = namedtuple("PartitionViolation", "vertex row_sum")
InterpolationViolation = namedtuple("InterpolationViolation", "vertex handle value expected")


class HandleSet:
    """Deformation handles: disjoint non-empty vertex index sets."""

    def __init__(self, handles):
        parsed = []
        seen = set()
        for h in handles:
            idx = sorted(int(v) for v in h)
            if not idx:
                raise DimensionMismatch("handle with no vertices")
            if seen.intersection(idx):
                raise DimensionMismatch("handle vertex sets must be pairwise disjoint")
            seen.update(idx)
            parsed.append(tuple(idx))
        if not parsed:
            raise DimensionMismatch("at least one handle is required")
        self.handles = parsed

    @property
    def m(self):
        return len(self.handles)

    def all_vertices(self):
        return sorted(v for h in self.handles for v in h)

    def validate_for(self, n):
        for h in self.handles:
            if h[0] < 0 or h[-1] >= n:
                raise DimensionMismatch(f"handle vertex out of range [0, {n})")


@dataclass
class HandleSolveStats:
    iterations: int
    kkt_residual: float
    active_lower: int
    active_upper: int
    wall_time: float
    # objective value at each feasible iterate, for monotonicity checks
    objective_trace: list = field(default_factory=list)


@dataclass
class QpReport:
    per_handle: list = field(default_factory=list)
    fallback_rows: list = field(default_factory=list)
    min_row_sum_pre_norm: float = 0.0
    wall_time: float = 0.0

    def total_iterations(self):
        return sum(h.iterations for h in self.per_handle)

    def max_kkt_residual(self):
        return max((h.kkt_residual for h in self.per_handle), default=0.0)

    def to_dict(self):
        return {
            "per_handle": [vars(h) for h in self.per_handle],
            "fallback_rows": list(self.fallback_rows),
            "min_row_sum_pre_norm": self.min_row_sum_pre_norm,
            "wall_time": self.wall_time,
        }


def _check_connectivity(energy: SparseSymMatrix, handles: HandleSet):
    off = energy.rows != energy.cols
    adj = sp.csr_matrix(
        (np.ones(int(off.sum())), (energy.rows[off], energy.cols[off])),
        shape=(energy.n, energy.n),
    )
    n_comp, labels = csgraph.connected_components(adj, directed=False)
    handle_comps = {labels[v] for h in handles.handles for v in h}
    missing = set(range(n_comp)) - handle_comps
    if missing:
        orphan = int(np.flatnonzero(np.isin(labels, list(missing)))[0])
        raise Disconnected(f"vertex {orphan} has no path to any handle")
    return adj


def _solve_handle_qp(a_dense, pinned, pinned_values, tol, max_iter, reg, scale):
    """Active-set QP for one handle on the dense energy matrix."""
    n = a_dense.shape[0]
    status = np.full(n, _FREE, dtype=np.int8)
    status[pinned] = _PINNED
    w = np.zeros(n)
    w[pinned] = pinned_values
    feas_eps = 1e-12
    objective_trace = []

    iterations = 0
    while iterations < max_iter:
        iterations += 1
        free = status == _FREE
        idx_free = np.flatnonzero(free)
        if idx_free.size:
            a_ff = a_dense[np.ix_(idx_free, idx_free)].copy()
            a_ff[np.diag_indices_from(a_ff)] += reg
            rhs = -a_dense[np.ix_(idx_free, ~free)] @ w[~free]
            try:
                cho = sla.cho_factor(a_ff, lower=True, check_finite=False)
            except sla.LinAlgError:
                raise NotPSD("reduced system is not positive definite past regularization") from None
            w[idx_free] = sla.cho_solve(cho, rhs, check_finite=False)

        # clamp the most violating free variable, lowest index on ties
        viol = np.maximum(w - 1.0, -w)
        viol[~free] = -np.inf
        worst = int(np.argmax(viol))
        if viol[worst] > feas_eps:
            if w[worst] > 0.5:
                status[worst], w[worst] = _UPPER, 1.0
            else:
                status[worst], w[worst] = _LOWER, 0.0
            continue
        w[free] = np.clip(w[free], 0.0, 1.0)
        objective_trace.append(float(0.5 * w @ a_dense @ w))

        # feasible point: release the bound with the most negative multiplier
        grad = a_dense @ w
        lam = np.full(n, np.inf)
        at_lower = status == _LOWER
        at_upper = status == _UPPER
        lam[at_lower] = grad[at_lower]
        lam[at_upper] = -grad[at_upper]
        lam_min_idx = int(np.argmin(lam))
        lam_min = lam[lam_min_idx] if np.isfinite(lam[lam_min_idx]) else 0.0
        if lam_min < -tol * scale:
            status[lam_min_idx] = _FREE
            continue

        resid = max(
            float(np.max(np.abs(grad[free]), initial=0.0)) / scale,
            max(0.0, -lam_min) / scale,
        )
        if resid <= tol:
            return w, (iterations, resid, int(at_lower.sum()), int(at_upper.sum()), objective_trace)
        raise MaxIterations(f"stalled at KKT residual {resid:.3e} > tol {tol:.3e}")
    raise MaxIterations(f"active set did not converge within {max_iter} iterations")



def normalize_rows(weights):
    """Scale each row to sum to 1; rows already summing to 1 are untouched,
    which makes the operation exactly idempotent."""
    w = np.array(weights, dtype=np.float64)
    sums = w.sum(axis=1)
    fix = np.abs(sums - 1.0) > 1e-15
    w[fix] = w[fix] / sums[fix, None]
    return w


def _nearest_handle_indicator(adj, handles: HandleSet, rows):
    """Indicator rows for degenerate vertices: nearest handle by hop count."""
    dists = np.vstack(
        [
            csgraph.dijkstra(adj, directed=False, unweighted=True, indices=list(h)).min(axis=0)
            for h in handles.handles
        ]
    )
    out = np.zeros((len(rows), handles.m))
    for r, v in enumerate(rows):
        out[r, int(np.argmin(dists[:, v]))] = 1.0
    return out


def solve_bbw(energy: SparseSymMatrix, handles: HandleSet, tol=1e-8, max_iter=None):
    """Bounded biharmonic weights for every handle.

    Returns (weights, report) where weights is (n, m) with rows summing to
    one. The KKT tolerance is measured against the energy's mean diagonal,
    so rescaling the energy by a positive constant leaves the result
    unchanged.
    """
    if isinstance(handles, (list, tuple)):
        handles = HandleSet(handles)
    n = energy.n
    handles.validate_for(n)
    adj = _check_connectivity(energy, handles)

    a_dense = energy.to_dense()
    trace = float(np.trace(a_dense))
    scale = max(trace / n, 1e-300)
    reg = 1e-10 * scale
    if max_iter is None:
        max_iter = 100 * n

    t0 = time.perf_counter()
    report = QpReport()
    w_all = np.zeros((n, handles.m))
    handle_verts = handles.all_vertices()
    for k, hk in enumerate(handles.handles):
        pinned = np.asarray(handle_verts, dtype=np.int64)
        pinned_values = np.array([1.0 if v in set(hk) else 0.0 for v in handle_verts])
        tk = time.perf_counter()
        w, (iters, resid, nl, nu, trace) = _solve_handle_qp(
            a_dense, pinned, pinned_values, tol, max_iter, reg, scale
        )
        report.per_handle.append(
            HandleSolveStats(iters, resid, nl, nu, time.perf_counter() - tk, trace)
        )
        w_all[:, k] = w

    sums = w_all.sum(axis=1)
    report.min_row_sum_pre_norm = float(sums.min())
    degenerate = np.flatnonzero(sums < 1e-12)
    if degenerate.size:
        w_all[degenerate] = _nearest_handle_indicator(adj, handles, degenerate)
        report.fallback_rows = [int(v) for v in degenerate]
    w_all = normalize_rows(w_all)
    report.wall_time = time.perf_counter() - t0
    return w_all, report


def check_weights(weights, handles: HandleSet, tol=1e-9):
    """Validate weight-matrix invariants; returns a list of violations."""
    if isinstance(handles, (list, tuple)):
        handles = HandleSet(handles)
    w = np.asarray(weights, dtype=np.float64)
    n, m = w.shape
    if m != handles.m:
        raise DimensionMismatch(f"weights have {m} columns for {handles.m} handles")
    handles.validate_for(n)
    violations = []
    for i, k in zip(*np.where((w < -tol) | (w > 1 + tol))):
        violations.append(BoundViolation(int(i), int(k), float(w[i, k])))
    sums = w.sum(axis=1)
    for i in np.flatnonzero(np.abs(sums - 1.0) > tol):
        violations.append(PartitionViolation(int(i), float(sums[i])))
    for k, hk in enumerate(handles.handles):
        for v in hk:
            for kk in range(m):
                expected = 1.0 if kk == k else 0.0
                if abs(w[v, kk] - expected) > tol:
                    violations.append(
                        InterpolationViolation(int(v), int(kk), float(w[v, kk]), expected)
                    )
    return violations

"""Input validation helpers used at API boundaries."""
from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch, EmptyCloud


def as_points_array(x, name="points"):
    """Coerce to a finite (n, 3) float64 array."""
    a = np.ascontiguousarray(x, dtype=np.float64)
    if a.ndim != 2 or a.shape[1] != 3:
        raise EmptyCloud(f"{name} must have shape (n, 3), got {a.shape}")
    if not np.isfinite(a).all():
        raise EmptyCloud(f"{name} contains NaN or Inf")
    return a


def check_same_order(n_a, n_b, what="operands"):
    if n_a != n_b:
        raise DimensionMismatch(f"{what} have mismatched orders: {n_a} vs {n_b}")


def check_matrix_shape(w, n_rows, n_cols, what="matrix"):
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (n_rows, n_cols):
        raise DimensionMismatch(f"{what} must be ({n_rows}, {n_cols}), got {w.shape}")
    return w

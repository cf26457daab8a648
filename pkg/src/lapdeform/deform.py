"""Linear blend skinning and handle placement."""
from __future__ import annotations

import numpy as np

from .bbw import HandleSet
from .errors import DimensionMismatch, TooManyHandles
from .geometry import PointCloud
from .validation import check_matrix_shape


class AffineTransform:
    """3x3 linear part plus translation, applied as T(p) = linear @ p + t."""

    def __init__(self, linear=None, translation=None):
        self.linear = np.eye(3) if linear is None else np.asarray(linear, dtype=np.float64)
        self.translation = (
            np.zeros(3) if translation is None else np.asarray(translation, dtype=np.float64)
        )
        if self.linear.shape != (3, 3) or self.translation.shape != (3,):
            raise DimensionMismatch("affine transform needs a 3x3 linear part and a 3-vector")
        if not (np.isfinite(self.linear).all() and np.isfinite(self.translation).all()):
            raise DimensionMismatch("affine transform entries must be finite")

    @classmethod
    def identity(cls):
        return cls()

    @classmethod
    def translate(cls, t):
        return cls(np.eye(3), t)

    def apply(self, points):
        return points @ self.linear.T + self.translation


def lbs_deform(points: PointCloud, weights, transforms) -> PointCloud:
    """Blend per-handle affine transforms: p_i' = sum_k w_ki T_k(p_i).

    When every handle carries the identity the output positions are bitwise
    equal to the input; a shared transform reproduces it exactly thanks to
    rows summing to one.
    """
    pts = points.positions
    n = pts.shape[0]
    m = len(transforms)
    w = check_matrix_shape(weights, n, m, "weights")
    eye = np.eye(3)
    if all(
        not t.translation.any() and np.array_equal(t.linear, eye) for t in transforms
    ):
        # all-identity short circuit keeps the output bitwise equal to the input
        return PointCloud(pts.copy(), None if points.colors is None else points.colors.copy())
    out = np.zeros_like(pts)
    for k, t in enumerate(transforms):
        out += w[:, k : k + 1] * t.apply(pts)
    return PointCloud(out, None if points.colors is None else points.colors.copy())


def handles_from_fps(points: PointCloud, m: int, seed: int = 0) -> HandleSet:
    """m singleton handles by farthest point sampling.

    The first pick is seed mod n; every next pick maximizes the minimum
    distance to the chosen set, ties broken by lowest index.
    """
    pts = points.positions
    n = pts.shape[0]
    if m > n:
        raise TooManyHandles(f"requested {m} handles for {n} points")
    if m < 1:
        raise TooManyHandles("at least one handle is required")
    chosen = [int(seed) % n]
    min_d2 = np.sum((pts - pts[chosen[0]]) ** 2, axis=1)
    while len(chosen) < m:
        nxt = int(np.argmax(min_d2))  # argmax returns the lowest index on ties
        chosen.append(nxt)
        min_d2 = np.minimum(min_d2, np.sum((pts - pts[nxt]) ** 2, axis=1))
    return HandleSet([[v] for v in chosen])

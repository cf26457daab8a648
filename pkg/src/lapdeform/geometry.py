"""Core geometric carriers: point clouds, tet meshes, surface meshes, KNN.

All types are immutable after construction (arrays are flagged read-only),
so they are safe to share across threads without coordination.
"""
from __future__ import annotations

import warnings

import numpy as np

from .errors import DegenerateTet, EmptyCloud, IndexOutOfRange
from .validation import as_points_array


def _freeze(a):
    a.setflags(write=False)
    return a


class PointCloud:
    """An ordered set of n points in 3D, with optional per-point colors.

    Parameters
    ----------
    positions : (n, 3) array_like
        Point coordinates in model units. Must be finite, n >= 1.
    colors : (n, 3) array_like, optional
        Per-point RGB in [0, 1].
    """

    def __init__(self, positions, colors=None):
        pos = as_points_array(positions, name="positions")
        if pos.shape[0] < 1:
            raise EmptyCloud("point cloud must contain at least one point")
        self.positions = _freeze(pos)
        if colors is not None:
            colors = np.asarray(colors, dtype=np.float64)
            if colors.shape != pos.shape:
                raise EmptyCloud("colors must match positions shape")
            colors = _freeze(colors)
        self.colors = colors

    def __len__(self):
        return self.positions.shape[0]

    @property
    def n(self):
        return self.positions.shape[0]

    def bbox(self):
        return self.positions.min(axis=0), self.positions.max(axis=0)


def _tet_volumes(vertices, tets):
    a = vertices[tets[:, 0]]
    d1 = vertices[tets[:, 1]] - a
    d2 = vertices[tets[:, 2]] - a
    d3 = vertices[tets[:, 3]] - a
    return np.einsum("ij,ij->i", np.cross(d1, d2), d3) / 6.0


class TetMesh:
    """A tetrahedral mesh with canonically oriented, positive-volume tets.

    Negatively oriented tets are repaired at construction by swapping the
    last two indices. Tets whose volume stays below ``1e-14 * bbox_diag**3``
    are rejected as degenerate.
    """

    def __init__(self, vertices, tets):
        verts = as_points_array(vertices, name="vertices")
        tets = np.asarray(tets, dtype=np.int64)
        if tets.ndim != 2 or tets.shape[1] != 4:
            raise IndexOutOfRange("tets must be a (T, 4) index array")
        n = verts.shape[0]
        if tets.size and (tets.min() < 0 or tets.max() >= n):
            raise IndexOutOfRange(
                f"tet index out of range [0, {n}): found {tets.min()}..{tets.max()}"
            )
        tets = tets.copy()
        vols = _tet_volumes(verts, tets)
        neg = vols < 0
        if neg.any():
            tets[neg, 2], tets[neg, 3] = tets[neg, 3].copy(), tets[neg, 2].copy()
            vols = np.abs(vols)
        extent = verts.max(axis=0) - verts.min(axis=0) if n else np.zeros(3)
        scale = max(float(np.max(extent)), 1.0e-30)
        if np.any(vols < 1e-14 * scale**3):
            bad = int(np.argmin(vols))
            raise DegenerateTet(f"tet {bad} has near-zero volume {vols[bad]:.3e}")
        key = np.sort(tets, axis=1)
        _, counts = np.unique(key, axis=0, return_counts=True)
        if np.any(counts > 1):
            raise IndexOutOfRange("duplicate tets in mesh")
        self.vertices = _freeze(verts)
        self.tets = _freeze(tets)

    @property
    def n(self):
        return self.vertices.shape[0]

    @property
    def num_tets(self):
        return self.tets.shape[0]

    def volumes(self):
        """Signed volumes per tet (all positive by construction)."""
        return _tet_volumes(self.vertices, self.tets)

    def point_cloud(self):
        return PointCloud(self.vertices)


class SurfaceMesh:
    """Triangle mesh used for visualization and export only."""

    def __init__(self, vertices, triangles):
        verts = as_points_array(vertices, name="vertices")
        tris = np.asarray(triangles, dtype=np.int64).reshape(-1, 3)
        if tris.size and (tris.min() < 0 or tris.max() >= verts.shape[0]):
            raise IndexOutOfRange("triangle index out of range")
        self.vertices = _freeze(verts)
        self.triangles = _freeze(tris)


class KnnIndex:
    """Exact k-nearest-neighbor lists, one per point.

    Neighbor lists are sorted by ascending Euclidean distance with ties
    broken by ascending point index; a point is never its own neighbor.
    When k exceeds n - 1 the lists are clamped to n - 1 entries.
    """

    def __init__(self, k, neighbors, distances):
        self.k = k
        self.neighbors = _freeze(np.asarray(neighbors, dtype=np.int64))
        self.distances = _freeze(np.asarray(distances, dtype=np.float64))

    @property
    def n(self):
        return self.neighbors.shape[0]


def build_knn(cloud: PointCloud, k: int) -> KnnIndex:
    """Exact KNN via brute-force distances with stable tie-breaking.

    k is clamped to n - 1 (with a warning) so every point keeps a full
    neighbor list even on tiny clouds.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    pts = cloud.positions
    n = pts.shape[0]
    k_eff = min(k, n - 1)
    if k_eff < k:
        warnings.warn(f"k={k} clamped to {k_eff} for a cloud of {n} points")
    if k_eff == 0:
        return KnnIndex(k_eff, np.zeros((n, 0), dtype=np.int64), np.zeros((n, 0)))
    d2 = np.sum((pts[:, None, :] - pts[None, :, :]) ** 2, axis=2)
    np.fill_diagonal(d2, np.inf)
    # stable sort keeps ascending index on exact distance ties
    order = np.argsort(d2, axis=1, kind="stable")[:, :k_eff]
    dist = np.sqrt(np.take_along_axis(d2, order, axis=1))
    return KnnIndex(k_eff, order, dist)


# outward-oriented faces of a positively oriented tet (a, b, c, d)
_TET_FACES = np.array([[1, 2, 3], [0, 2, 1], [0, 1, 3], [0, 3, 2]])


def surface_of(mesh: TetMesh) -> SurfaceMesh:
    """Boundary triangles of a tet mesh: faces owned by exactly one tet.

    Triangles keep the outward orientation inherited from their owning tet.
    """
    faces = mesh.tets[:, _TET_FACES].reshape(-1, 3)
    key = np.sort(faces, axis=1)
    _, inverse, counts = np.unique(key, axis=0, return_inverse=True, return_counts=True)
    boundary = faces[counts[inverse] == 1]
    return SurfaceMesh(mesh.vertices, boundary)

"""Volume FEM assembly: cotangent Laplacian, lumped mass, deformation energy.

The Laplacian convention is L = -S with S the linear-FEM stiffness matrix,
so off-diagonal entries are (positive, in the usual case) cotangent weights
and each row sums to zero. The deformation energy A = L M^-1 L is symmetric
positive semi-definite regardless of the sign choice because L enters twice.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .errors import DegenerateTet, DimensionMismatch, NonPositiveMass
from .geometry import TetMesh
from .validation import check_same_order

# entries with magnitude below this are treated as structural zeros
_STORE_EPS = 1e-300


class SparseSymMatrix:
    """Symmetric sparse matrix stored as upper-triangle COO (i <= j).

    Entries are coordinate-sorted with duplicates summed; the lower triangle
    is implied. Exact zeros are dropped from storage.
    """

    def __init__(self, n, rows, cols, values):
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        values = np.asarray(values, dtype=np.float64)
        if not (rows.shape == cols.shape == values.shape):
            raise DimensionMismatch("rows/cols/values must have equal length")
        if rows.size and (min(rows.min(), cols.min()) < 0 or max(rows.max(), cols.max()) >= n):
            raise DimensionMismatch(f"index out of range for order {n}")
        if not np.isfinite(values).all():
            raise DimensionMismatch("matrix values must be finite")
        i = np.minimum(rows, cols)
        j = np.maximum(rows, cols)
        # canonicalize: sort by (i, j), sum duplicates, drop explicit zeros
        order = np.lexsort((j, i))
        i, j, values = i[order], j[order], values[order]
        if i.size:
            new_group = np.empty(i.size, dtype=bool)
            new_group[0] = True
            new_group[1:] = (i[1:] != i[:-1]) | (j[1:] != j[:-1])
            group = np.cumsum(new_group) - 1
            vals = np.bincount(group, weights=values)
            i = i[new_group]
            j = j[new_group]
        else:
            vals = values
        keep = np.abs(vals) >= _STORE_EPS
        self.n = int(n)
        self.rows = i[keep]
        self.cols = j[keep]
        self.values = vals[keep]
        for a in (self.rows, self.cols, self.values):
            a.setflags(write=False)

    @property
    def nnz(self):
        return self.values.size

    @classmethod
    def from_scipy(cls, m):
        m = sp.coo_matrix(m)
        keep = m.row <= m.col
        return cls(m.shape[0], m.row[keep], m.col[keep], m.data[keep])

    def to_scipy(self):
        """Full (symmetrically completed) CSR matrix."""
        off = self.rows != self.cols
        r = np.concatenate([self.rows, self.cols[off]])
        c = np.concatenate([self.cols, self.rows[off]])
        v = np.concatenate([self.values, self.values[off]])
        return sp.csr_matrix((v, (r, c)), shape=(self.n, self.n))

    def to_dense(self):
        return self.to_scipy().toarray()

    def matvec(self, x):
        return self.to_scipy() @ x

    def row_sums(self):
        return np.asarray(self.to_scipy().sum(axis=1)).ravel()

    def frobenius(self):
        off = self.rows != self.cols
        return float(np.sqrt(np.sum(self.values**2) + np.sum(self.values[off] ** 2)))

    def entry_map(self):
        """dict mapping (i, j) with i <= j to the stored value."""
        return {(int(i), int(j)): float(v) for i, j, v in zip(self.rows, self.cols, self.values)}


class DiagMatrix:
    """Diagonal matrix of order n (mass / inverse-mass carrier)."""

    def __init__(self, values, require_positive=False):
        v = np.ascontiguousarray(values, dtype=np.float64)
        if v.ndim != 1:
            raise DimensionMismatch("diagonal must be a 1D array")
        if not np.isfinite(v).all():
            raise DimensionMismatch("diagonal values must be finite")
        if require_positive and np.any(v <= 0):
            raise NonPositiveMass("diagonal entries must be strictly positive")
        self.values = v
        self.values.setflags(write=False)

    @property
    def n(self):
        return self.values.size

    def to_scipy(self):
        return sp.diags(self.values, format="csr")


def _hat_gradients(verts, tets):
    """Per-tet gradients of the four linear hat functions and tet volumes.

    Returns (grads, volumes) with grads of shape (T, 4, 3); grads[:, 0] is
    the gradient for the first tet vertex, computed as minus the sum of the
    other three (partition of unity of hat functions).
    """
    a = verts[tets[:, 0]]
    d = np.stack(
        [verts[tets[:, 1]] - a, verts[tets[:, 2]] - a, verts[tets[:, 3]] - a], axis=2
    )  # (T, 3, 3) columns are edge vectors
    det = np.linalg.det(d)
    if np.any(np.abs(det) < 1e-300):
        raise DegenerateTet("tet with zero volume in assembly")
    g123 = np.linalg.inv(d)  # (T, 3, 3): row r is the gradient of hat r+1
    g0 = -g123.sum(axis=1, keepdims=True)
    grads = np.concatenate([g0, g123], axis=1)  # (T, 4, 3)
    return grads, det / 6.0


def cotan_laplacian(mesh: TetMesh) -> SparseSymMatrix:
    """Assemble L = -S from linear FEM hat-function gradients.

    S_ij = sum over tets containing both vertices of V_t * (g_i . g_j); the
    result is symmetric with zero row sums. Stored sparsity is the FEM
    connectivity (vertex pairs sharing a tet) minus entries that cancel to
    exact zero in storage.
    """
    grads, vols = _hat_gradients(mesh.vertices, mesh.tets)
    if np.any(vols <= 0):
        raise DegenerateTet("negatively oriented tet reached assembly")
    # all 16 local pairs per tet; SparseSymMatrix canonicalizes and sums
    local = np.einsum("tad,tbd,t->tab", grads, grads, vols)  # (T, 4, 4)
    ii = np.repeat(mesh.tets, 4, axis=1).reshape(-1)  # a-index varies slower
    jj = np.tile(mesh.tets, (1, 4)).reshape(-1)
    upper = ii <= jj
    return SparseSymMatrix(mesh.n, ii[upper], jj[upper], -local.reshape(-1)[upper])


def lumped_mass(mesh: TetMesh) -> DiagMatrix:
    """Barycentric lumped mass: a quarter of each incident tet's volume."""
    vols = mesh.volumes()
    if np.any(vols <= 0):
        raise DegenerateTet("non-positive tet volume in mass assembly")
    m = np.zeros(mesh.n)
    np.add.at(m, mesh.tets.ravel(), np.repeat(vols / 4.0, 4))
    return DiagMatrix(m, require_positive=True)


def inverse_mass(mass: DiagMatrix) -> DiagMatrix:
    """Entrywise reciprocal of a strictly positive diagonal."""
    if np.any(mass.values <= 0):
        raise NonPositiveMass("mass entries must be strictly positive")
    return DiagMatrix(1.0 / mass.values, require_positive=True)


def deformation_energy(lap: SparseSymMatrix, minv: DiagMatrix) -> SparseSymMatrix:
    """A = L M^-1 L via a sparse triple product; symmetric PSD, A 1 = 0."""
    check_same_order(lap.n, minv.n, "Laplacian and inverse mass")
    l = lap.to_scipy()
    a = (l @ minv.to_scipy() @ l).tocoo()
    # symmetrize exactly against roundoff asymmetry in the product
    a = (a + a.T) * 0.5
    return SparseSymMatrix.from_scipy(a)

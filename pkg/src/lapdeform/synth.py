"""Deterministic synthetic tet-mesh fixtures for training and tests.

Shapes are grid-subdivided (6 Kuhn tets per cube cell), optionally
seed-jittered on interior vertices, and normalized to the unit cube
centered at the origin.
"""
from __future__ import annotations

import numpy as np

from .errors import UnsupportedKind
from .geometry import TetMesh

# Kuhn subdivision: 6 tets per cell, all sharing the (0,0,0)-(1,1,1) diagonal.
# Corner offsets are cumulative sums of axis permutations, which makes face
# diagonals consistent between neighboring cells.
_PERMS = [(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)]


def _cell_tets():
    tets = []
    eye = np.eye(3, dtype=np.int64)
    for perm in _PERMS:
        c0 = np.zeros(3, dtype=np.int64)
        c1 = c0 + eye[perm[0]]
        c2 = c1 + eye[perm[1]]
        c3 = c2 + eye[perm[2]]
        tets.append([c0, c1, c2, c3])
    return np.array(tets)  # (6, 4, 3) corner offsets


_CELL_TETS = _cell_tets()


def _grid_mesh(cells, keep=None):
    """Vertices and tets of a cell grid; `keep(cx, cy, cz)` filters cells."""
    nx, ny, nz = cells
    coords = np.stack(
        np.meshgrid(np.arange(nx + 1), np.arange(ny + 1), np.arange(nz + 1), indexing="ij"),
        axis=-1,
    ).astype(np.float64)

    def vid(ix, iy, iz):
        return (ix * (ny + 1) + iy) * (nz + 1) + iz

    tets = []
    for cx in range(nx):
        for cy in range(ny):
            for cz in range(nz):
                if keep is not None and not keep(cx, cy, cz):
                    continue
                base = np.array([cx, cy, cz], dtype=np.int64)
                for tet in _CELL_TETS:
                    tets.append([vid(*(base + corner)) for corner in tet])
    tets = np.asarray(tets, dtype=np.int64)
    verts = coords.reshape(-1, 3)
    used = np.zeros(verts.shape[0], dtype=bool)
    used[tets.ravel()] = True
    remap = -np.ones(verts.shape[0], dtype=np.int64)
    remap[used] = np.arange(used.sum())
    return verts[used], remap[tets], used


def _interior_mask(verts):
    lo = verts.min(axis=0)
    hi = verts.max(axis=0)
    on_boundary = np.zeros(verts.shape[0], dtype=bool)
    for ax in range(3):
        on_boundary |= np.isclose(verts[:, ax], lo[ax]) | np.isclose(verts[:, ax], hi[ax])
    return ~on_boundary


def _jitter_interior(verts, rng, amount):
    mask = _interior_mask(verts)
    out = verts.copy()
    out[mask] += rng.uniform(-amount, amount, size=(int(mask.sum()), 3))
    return out


def _normalize_unit_cube(verts):
    lo = verts.min(axis=0)
    hi = verts.max(axis=0)
    center = (lo + hi) / 2.0
    extent = float(np.max(hi - lo))
    return (verts - center) / extent


def _spherify(p):
    """Smooth cube([-1,1]^3) -> unit ball map with positive Jacobian."""
    x, y, z = p[:, 0], p[:, 1], p[:, 2]
    x2, y2, z2 = x * x, y * y, z * z
    out = np.empty_like(p)
    out[:, 0] = x * np.sqrt(np.maximum(1 - y2 / 2 - z2 / 2 + y2 * z2 / 3, 0.0))
    out[:, 1] = y * np.sqrt(np.maximum(1 - z2 / 2 - x2 / 2 + z2 * x2 / 3, 0.0))
    out[:, 2] = z * np.sqrt(np.maximum(1 - x2 / 2 - y2 / 2 + x2 * y2 / 3, 0.0))
    return out


def synth_shape(kind: str, resolution: int, seed: int) -> TetMesh:
    """Generate a deterministic tet-mesh fixture normalized to the unit cube.

    Kinds: ``bar`` (elongated box), ``ellipsoid`` (spherified grid), and
    ``lshape`` (box with one quadrant removed). The seed perturbs interior
    vertices only, so boundary geometry and cell topology are stable.
    """
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    rng = np.random.default_rng(seed)
    if kind == "bar":
        cross = max(1, resolution // 2)
        cells = (resolution, cross, cross)
        verts, tets, _ = _grid_mesh(cells)
        verts = _jitter_interior(verts, rng, 0.05)
        # stretch the x axis so the bar is twice as long as it is wide
        verts[:, 0] *= 2.0 * cross / resolution
    elif kind == "lshape":
        r = resolution
        cells = (2 * r, 2 * r, r)
        verts, tets, _ = _grid_mesh(cells, keep=lambda cx, cy, cz: not (cx >= r and cy >= r))
        verts = _jitter_interior(verts, rng, 0.05)
    elif kind == "ellipsoid":
        r = resolution
        verts, tets, _ = _grid_mesh((r, r, r))
        verts = _jitter_interior(verts, rng, 0.05)
        verts = verts / r * 2.0 - 1.0  # cells -> [-1, 1]^3
        verts = _spherify(verts) * np.array([1.0, 0.8, 0.6])
    else:
        raise UnsupportedKind(f"unknown shape kind {kind!r}")
    return TetMesh(_normalize_unit_cube(verts), tets)


def two_bars(resolution: int = 3, gap: float = 0.05, seed: int = 0) -> TetMesh:
    """Two parallel bars separated by a thin gap along y.

    The fixture is deliberately adversarial for Euclidean-neighborhood
    Laplacians: the gap is smaller than the grid spacing, so KNN graphs
    couple the two disconnected components. Per-seed size jitter keeps a
    family of distinct shapes for training/held-out splits.
    """
    rng = np.random.default_rng(seed)
    r = resolution
    cells = (2 * r, r, r)
    verts, tets, _ = _grid_mesh(cells)
    # physical size: length 1.0, cross-section ~0.22, seed-scaled +-8%
    sx = 1.0 * (1.0 + 0.08 * rng.uniform(-1, 1))
    sy = 0.22 * (1.0 + 0.08 * rng.uniform(-1, 1))
    sz = 0.22 * (1.0 + 0.08 * rng.uniform(-1, 1))
    bar = verts / np.array([2 * r, r, r]) * np.array([sx, sy, sz])
    bar = bar + rng.uniform(-0.004, 0.004, size=bar.shape)
    n = bar.shape[0]
    shift = np.array([0.0, bar[:, 1].max() - bar[:, 1].min() + gap, 0.0])
    all_verts = np.vstack([bar, bar + shift])
    all_tets = np.vstack([tets, tets + n])
    all_verts = all_verts - (all_verts.min(axis=0) + all_verts.max(axis=0)) / 2.0
    return TetMesh(all_verts, all_tets)

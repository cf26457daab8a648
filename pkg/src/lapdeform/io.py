"""File I/O: point clouds (.xyz, ascii PLY), TetGen meshes (.node/.ele),
matrix exports (SSM/DIA text), weight matrices (CSV and LBSW binary), and
the small JSON formats used by the CLI and service.

Numeric text output uses %.17g so load -> save -> load round trips are
exact for float64.
"""
from __future__ import annotations

import json
import struct

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyCloud,
    IndexOutOfRange,
    ParseError,
)
from .fem import DiagMatrix, SparseSymMatrix
from .geometry import PointCloud, TetMesh

_FMT = "%.17g"


def _fnum(x):
    return _FMT % x


# ---------------------------------------------------------------------------
# point clouds


def load_point_cloud(path, format="xyz") -> PointCloud:
    """Load a point cloud from an .xyz or ascii PLY file."""
    if format == "xyz":
        return _load_xyz(path)
    if format == "ply-ascii":
        return _load_ply(path)
    raise ParseError(path, 0, f"unknown point cloud format {format!r}")


def _load_xyz(path) -> PointCloud:
    pts = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) < 3:
                raise ParseError(path, lineno, f"expected 3 coordinates, got {len(parts)}")
            try:
                pts.append([float(parts[0]), float(parts[1]), float(parts[2])])
            except ValueError as exc:
                raise ParseError(path, lineno, str(exc)) from None
    if not pts:
        raise EmptyCloud(f"{path}: no points")
    return PointCloud(np.asarray(pts))


def save_point_cloud(cloud: PointCloud, path, format="xyz"):
    if format == "xyz":
        with open(path, "w") as fh:
            for p in cloud.positions:
                fh.write(f"{_fnum(p[0])} {_fnum(p[1])} {_fnum(p[2])}\n")
        return
    if format == "ply-ascii":
        _save_ply(cloud, path)
        return
    raise ParseError(path, 0, f"unknown point cloud format {format!r}")


def _load_ply(path) -> PointCloud:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0].strip() != "ply":
        raise ParseError(path, 1, "not a PLY file")
    n_vertex = None
    props = []
    in_vertex_element = False
    body_start = None
    for lineno, line in enumerate(lines[1:], start=2):
        tok = line.split()
        if not tok:
            continue
        if tok[0] == "format":
            if tok[1] != "ascii":
                raise ParseError(path, lineno, "only ascii PLY is supported")
        elif tok[0] == "element":
            in_vertex_element = tok[1] == "vertex"
            if in_vertex_element:
                n_vertex = int(tok[2])
        elif tok[0] == "property" and in_vertex_element:
            props.append(tok[2])
        elif tok[0] == "end_header":
            body_start = lineno
            break
    if n_vertex is None or body_start is None:
        raise ParseError(path, 1, "missing vertex element or end_header")
    for name in ("x", "y", "z"):
        if name not in props:
            raise ParseError(path, body_start, f"vertex element lacks property {name}")
    idx = {name: props.index(name) for name in props}
    has_color = all(c in props for c in ("red", "green", "blue"))
    pts, colors = [], []
    rows = [l for l in lines[body_start:] if l.strip()]
    if len(rows) < n_vertex:
        raise ParseError(path, len(lines), f"expected {n_vertex} vertex rows, got {len(rows)}")
    for r, line in enumerate(rows[:n_vertex]):
        vals = line.split()
        try:
            pts.append([float(vals[idx["x"]]), float(vals[idx["y"]]), float(vals[idx["z"]])])
            if has_color:
                rgb = [float(vals[idx[c]]) for c in ("red", "green", "blue")]
                if max(rgb) > 1.0:  # uchar convention
                    rgb = [v / 255.0 for v in rgb]
                colors.append(rgb)
        except (ValueError, IndexError) as exc:
            raise ParseError(path, body_start + 1 + r, str(exc)) from None
    if not pts:
        raise EmptyCloud(f"{path}: no points")
    return PointCloud(np.asarray(pts), np.asarray(colors) if colors else None)


def _save_ply(cloud: PointCloud, path):
    with open(path, "w") as fh:
        fh.write("ply\nformat ascii 1.0\n")
        fh.write(f"element vertex {cloud.n}\n")
        fh.write("property double x\nproperty double y\nproperty double z\n")
        if cloud.colors is not None:
            fh.write("property uchar red\nproperty uchar green\nproperty uchar blue\n")
        fh.write("end_header\n")
        for i, p in enumerate(cloud.positions):
            row = f"{_fnum(p[0])} {_fnum(p[1])} {_fnum(p[2])}"
            if cloud.colors is not None:
                c = np.clip(np.round(cloud.colors[i] * 255), 0, 255).astype(int)
                row += f" {c[0]} {c[1]} {c[2]}"
            fh.write(row + "\n")


# ---------------------------------------------------------------------------
# TetGen .node / .ele


def _data_lines(path):
    out = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if line:
                out.append((lineno, line))
    return out


def load_tet_mesh(node_path, ele_path) -> TetMesh:
    """Load a TetGen .node/.ele pair; indices converted to 0-based."""
    node_lines = _data_lines(node_path)
    if not node_lines:
        raise ParseError(node_path, 1, "empty .node file")
    lineno, header = node_lines[0]
    tok = header.split()
    try:
        n, dim = int(tok[0]), int(tok[1])
    except (ValueError, IndexError):
        raise ParseError(node_path, lineno, "bad .node header") from None
    if dim != 3:
        raise ParseError(node_path, lineno, f"dimension must be 3, got {dim}")
    if len(node_lines) - 1 < n:
        raise ParseError(node_path, lineno, f"header declares {n} nodes, body has {len(node_lines) - 1}")
    base = None
    verts = np.empty((n, 3))
    for row, (lineno, line) in enumerate(node_lines[1 : 1 + n]):
        tok = line.split()
        try:
            idx = int(tok[0])
            xyz = [float(tok[1]), float(tok[2]), float(tok[3])]
        except (ValueError, IndexError):
            raise ParseError(node_path, lineno, "bad node line") from None
        if base is None:
            if idx not in (0, 1):
                raise ParseError(node_path, lineno, f"first node index must be 0 or 1, got {idx}")
            base = idx
        if idx - base != row:
            raise ParseError(node_path, lineno, f"non-contiguous node index {idx}")
        verts[row] = xyz

    ele_lines = _data_lines(ele_path)
    if not ele_lines:
        raise ParseError(ele_path, 1, "empty .ele file")
    lineno, header = ele_lines[0]
    tok = header.split()
    try:
        t, npt = int(tok[0]), int(tok[1])
    except (ValueError, IndexError):
        raise ParseError(ele_path, lineno, "bad .ele header") from None
    if npt != 4:
        raise ParseError(ele_path, lineno, f"nodes per tet must be 4, got {npt}")
    if len(ele_lines) - 1 < t:
        raise ParseError(ele_path, lineno, f"header declares {t} tets, body has {len(ele_lines) - 1}")
    tets = np.empty((t, 4), dtype=np.int64)
    for row, (lineno, line) in enumerate(ele_lines[1 : 1 + t]):
        tok = line.split()
        try:
            tets[row] = [int(v) for v in tok[1:5]]
        except (ValueError, IndexError):
            raise ParseError(ele_path, lineno, "bad element line") from None
    tets -= base
    if tets.size and (tets.min() < 0 or tets.max() >= n):
        raise IndexOutOfRange(
            f"{ele_path}: tet vertex index outside [{base}, {n - 1 + base}]"
        )
    return TetMesh(verts, tets)


def save_tet_mesh(mesh: TetMesh, node_path, ele_path):
    """Write a 1-based TetGen .node/.ele pair."""
    with open(node_path, "w") as fh:
        fh.write(f"{mesh.n} 3 0 0\n")
        for i, p in enumerate(mesh.vertices, start=1):
            fh.write(f"{i} {_fnum(p[0])} {_fnum(p[1])} {_fnum(p[2])}\n")
    with open(ele_path, "w") as fh:
        fh.write(f"{mesh.num_tets} 4 0\n")
        for i, tet in enumerate(mesh.tets, start=1):
            fh.write(f"{i} {tet[0] + 1} {tet[1] + 1} {tet[2] + 1} {tet[3] + 1}\n")


# ---------------------------------------------------------------------------
# matrix export (SSM / DIA)


def save_ssm(mat: SparseSymMatrix, path):
    with open(path, "w") as fh:
        fh.write(f"SSM {mat.n} {mat.nnz}\n")
        for i, j, v in zip(mat.rows, mat.cols, mat.values):
            fh.write(f"{i} {j} {_fnum(v)}\n")


def load_ssm(path) -> SparseSymMatrix:
    lines = _data_lines(path)
    if not lines:
        raise ParseError(path, 1, "empty SSM file")
    lineno, header = lines[0]
    tok = header.split()
    if len(tok) != 3 or tok[0] != "SSM":
        raise ParseError(path, lineno, "expected 'SSM n nnz' header")
    n, nnz = int(tok[1]), int(tok[2])
    if len(lines) - 1 != nnz:
        raise ParseError(path, lineno, f"header declares {nnz} entries, body has {len(lines) - 1}")
    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    vals = np.empty(nnz)
    for r, (lineno, line) in enumerate(lines[1:]):
        tok = line.split()
        try:
            rows[r], cols[r], vals[r] = int(tok[0]), int(tok[1]), float(tok[2])
        except (ValueError, IndexError):
            raise ParseError(path, lineno, "bad entry line") from None
        if rows[r] > cols[r]:
            raise ParseError(path, lineno, "entries must satisfy i <= j")
    return SparseSymMatrix(n, rows, cols, vals)


def save_dia(mat: DiagMatrix, path):
    with open(path, "w") as fh:
        fh.write(f"DIA {mat.n}\n")
        for v in mat.values:
            fh.write(_fnum(v) + "\n")


def load_dia(path) -> DiagMatrix:
    lines = _data_lines(path)
    if not lines:
        raise ParseError(path, 1, "empty DIA file")
    lineno, header = lines[0]
    tok = header.split()
    if len(tok) != 2 or tok[0] != "DIA":
        raise ParseError(path, lineno, "expected 'DIA n' header")
    n = int(tok[1])
    if len(lines) - 1 != n:
        raise ParseError(path, lineno, f"header declares {n} values, body has {len(lines) - 1}")
    vals = np.empty(n)
    for r, (lineno, line) in enumerate(lines[1:]):
        try:
            vals[r] = float(line.split()[0])
        except (ValueError, IndexError):
            raise ParseError(path, lineno, "bad diagonal value") from None
    return DiagMatrix(vals)


# ---------------------------------------------------------------------------
# weight matrices


def save_weights_csv(weights, path):
    w = np.asarray(weights, dtype=np.float64)
    n, m = w.shape
    with open(path, "w") as fh:
        fh.write("vertex," + ",".join(f"h{k}" for k in range(m)) + "\n")
        for i in range(n):
            fh.write(str(i) + "," + ",".join(_fnum(v) for v in w[i]) + "\n")


def load_weights_csv(path):
    with open(path) as fh:
        lines = [l.strip() for l in fh if l.strip()]
    if not lines or not lines[0].startswith("vertex,"):
        raise ParseError(path, 1, "expected 'vertex,h0,...' header")
    m = len(lines[0].split(",")) - 1
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        tok = line.split(",")
        if len(tok) != m + 1:
            raise ParseError(path, lineno, f"expected {m + 1} columns, got {len(tok)}")
        try:
            rows.append([float(v) for v in tok[1:]])
        except ValueError as exc:
            raise ParseError(path, lineno, str(exc)) from None
    return np.asarray(rows)


_LBSW_MAGIC = b"LBSW"


def save_weights_lbsw(weights, path):
    w = np.ascontiguousarray(weights, dtype="<f8")
    n, m = w.shape
    with open(path, "wb") as fh:
        fh.write(_LBSW_MAGIC)
        fh.write(struct.pack("<II", n, m))
        fh.write(w.tobytes())


def load_weights_lbsw(path):
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != _LBSW_MAGIC:
        raise ParseError(path, 1, "bad LBSW magic")
    n, m = struct.unpack_from("<II", blob, 4)
    expected = 12 + 8 * n * m
    if len(blob) < expected:
        raise ParseError(path, 1, f"truncated LBSW file: {len(blob)} < {expected} bytes")
    return np.frombuffer(blob[12:expected], dtype="<f8").reshape(n, m).copy()


# ---------------------------------------------------------------------------
# JSON helpers (handles, transforms, manifests)


def load_handles_json(path):
    """Read {"handles": [{"vertices": [..]}, ..]} into a list of index lists."""
    with open(path) as fh:
        doc = json.load(fh)
    try:
        return [list(map(int, h["vertices"])) for h in doc["handles"]]
    except (KeyError, TypeError) as exc:
        raise ParseError(path, 1, f"bad handles JSON: {exc}") from None


def save_handles_json(handles, path):
    doc = {"handles": [{"vertices": [int(v) for v in h]} for h in handles]}
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)


def load_transforms_json(path):
    """Read {"transforms": [{"linear": 3x3, "translation": [x,y,z]}, ..]}."""
    from .deform import AffineTransform

    with open(path) as fh:
        doc = json.load(fh)
    try:
        return [
            AffineTransform(np.asarray(t["linear"], dtype=float), np.asarray(t["translation"], dtype=float))
            for t in doc["transforms"]
        ]
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(path, 1, f"bad transforms JSON: {exc}") from None


def save_transforms_json(transforms, path):
    doc = {
        "transforms": [
            {"linear": t.linear.tolist(), "translation": t.translation.tolist()} for t in transforms
        ]
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)


def load_manifest(path):
    """Training manifest: JSON list of {"node": .., "ele": ..} path pairs."""
    with open(path) as fh:
        doc = json.load(fh)
    if not isinstance(doc, list):
        raise ParseError(path, 1, "manifest must be a JSON list")
    pairs = []
    for entry in doc:
        try:
            pairs.append((entry["node"], entry["ele"]))
        except (KeyError, TypeError) as exc:
            raise ParseError(path, 1, f"bad manifest entry: {exc}") from None
    return pairs

"""HTTP session service for the interactive editor.

A session holds a loaded shape, its deformation energy (computed once), and
the weight matrix for the current handle set (computed once per handle
set). Deformation queries are read-only and answered against an immutable
session snapshot, so they run concurrently; handle updates are serialized
by a per-session single-flight lock and bump the revision counter.
"""
from __future__ import annotations

import threading
import uuid
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from . import io as fileio
from .bbw import HandleSet, solve_bbw
from .deform import AffineTransform, lbs_deform
from .errors import DataError, LapDeformError, NumericalError
from .fem import deformation_energy, inverse_mass, lumped_mass, cotan_laplacian
from .geometry import PointCloud, surface_of
from .laplearn import LaplacianLearner
from .pcl import knn_graph_laplacian


@dataclass(frozen=True)
class Snapshot:
    """Immutable per-revision session state."""

    cloud: PointCloud
    surface_triangles: np.ndarray | None
    energy: object
    energy_tag: str
    handles: HandleSet | None
    weights: np.ndarray | None
    weight_stats: dict | None
    revision: int


class Session:
    def __init__(self, snapshot: Snapshot):
        self.snapshot = snapshot
        self.mutation_lock = threading.Lock()


def _parse_inline_xyz(text):
    pts = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) < 3:
            raise DataError(f"inline xyz line {lineno}: expected 3 coordinates")
        try:
            pts.append([float(v) for v in parts[:3]])
        except ValueError:
            raise DataError(f"inline xyz line {lineno}: bad number") from None
    if not pts:
        raise DataError("inline xyz carries no points")
    return PointCloud(np.asarray(pts))


def _require(doc, key, where):
    if not isinstance(doc, dict) or key not in doc:
        raise HTTPException(400, f"missing '{key}' in {where}")
    return doc[key]


def _load_shape(shape_doc):
    if not isinstance(shape_doc, dict):
        raise HTTPException(400, "shape must be an object")
    if "inline_xyz" in shape_doc:
        try:
            return _parse_inline_xyz(shape_doc["inline_xyz"])
        except DataError as exc:
            raise HTTPException(400, str(exc)) from None
    if "path" in shape_doc:
        path = Path(shape_doc["path"])
        if not path.exists():
            raise HTTPException(404, f"shape path not found: {path}")
        try:
            fmt = "ply-ascii" if path.suffix.lower() == ".ply" else "xyz"
            return fileio.load_point_cloud(path, format=fmt)
        except DataError as exc:
            raise HTTPException(400, str(exc)) from None
    raise HTTPException(400, "shape needs 'inline_xyz' or 'path'")


def _build_energy(cloud, energy_doc):
    """Returns (energy matrix, tag, surface triangles or None)."""
    etype = _require(energy_doc, "type", "energy")
    if etype == "fem":
        node = Path(_require(energy_doc, "node", "energy"))
        ele = Path(_require(energy_doc, "ele", "energy"))
        for p in (node, ele):
            if not p.exists():
                raise HTTPException(404, f"mesh path not found: {p}")
        try:
            mesh = fileio.load_tet_mesh(node, ele)
        except DataError as exc:
            raise HTTPException(400, str(exc)) from None
        if mesh.n != cloud.n:
            raise HTTPException(422, f"cloud has {cloud.n} points but mesh has {mesh.n} vertices")
        lap = cotan_laplacian(mesh)
        minv = inverse_mass(lumped_mass(mesh))
        return deformation_energy(lap, minv), "fem", surface_of(mesh).triangles
    if etype == "learned":
        model = Path(_require(energy_doc, "model", "energy"))
        if not model.exists():
            raise HTTPException(404, f"model path not found: {model}")
        try:
            learner = LaplacianLearner.from_file(model)
            pred = learner.predict(cloud)
        except DataError as exc:
            raise HTTPException(400, str(exc)) from None
        return deformation_energy(pred.lap, pred.minv), "learned", None
    if etype == "baseline":
        k = int(energy_doc.get("k", 12))
        try:
            lap, mass = knn_graph_laplacian(cloud, k=k)
        except DataError as exc:
            raise HTTPException(422, str(exc)) from None
        return deformation_energy(lap, inverse_mass(mass)), "baseline", None
    raise HTTPException(400, f"unknown energy type {etype!r}")


def create_app(static_dir=None) -> FastAPI:
    app = FastAPI(title="lapdeform deformation service")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    sessions: dict[str, Session] = {}
    registry_lock = threading.Lock()

    def get_session(session_id) -> Session:
        sess = sessions.get(session_id)
        if sess is None:
            raise HTTPException(404, f"unknown session {session_id}")
        return sess

    @app.exception_handler(LapDeformError)
    async def _lapdeform_error(request: Request, exc: LapDeformError):
        status = 500 if isinstance(exc, NumericalError) else 400
        return JSONResponse(
            {"error": type(exc).__name__, "detail": str(exc)}, status_code=status
        )

    @app.post("/sessions", status_code=201)
    async def create_session(body: dict):
        cloud = _load_shape(_require(body, "shape", "request"))
        energy, tag, tris = _build_energy(cloud, _require(body, "energy", "request"))
        snapshot = Snapshot(
            cloud=cloud,
            surface_triangles=tris,
            energy=energy,
            energy_tag=tag,
            handles=None,
            weights=None,
            weight_stats=None,
            revision=0,
        )
        session_id = uuid.uuid4().hex[:12]
        with registry_lock:
            sessions[session_id] = Session(snapshot)
        lo, hi = cloud.bbox()
        return {
            "session_id": session_id,
            "n": cloud.n,
            "bbox": {"min": lo.tolist(), "max": hi.tolist()},
            "energy": tag,
            "revision": 0,
        }

    @app.put("/sessions/{session_id}/handles")
    def put_handles(session_id: str, body: dict):
        sess = get_session(session_id)
        doc = _require(body, "handles", "request")
        try:
            handle_lists = [list(map(int, _require(h, "vertices", "handle"))) for h in doc]
            handles = HandleSet(handle_lists)
            handles.validate_for(sess.snapshot.cloud.n)
        except (DataError, TypeError, ValueError) as exc:
            raise HTTPException(422, f"invalid handles: {exc}") from None

        if not sess.mutation_lock.acquire(blocking=False):
            raise HTTPException(409, "a weight solve is already in flight for this session")
        try:
            snap = sess.snapshot
            if snap.handles is not None and snap.handles.handles == handles.handles:
                # identical handle set: serve the cached weights, no recompute
                return {
                    "m": handles.m,
                    "weight_stats": snap.weight_stats,
                    "revision": snap.revision,
                    "cached": True,
                }
            try:
                weights, report = solve_bbw(snap.energy, handles)
            except NumericalError as exc:
                raise HTTPException(500, f"{type(exc).__name__}: {exc}") from None
            stats = {
                "min_row_sum_pre_norm": report.min_row_sum_pre_norm,
                "iterations": report.total_iterations(),
                "kkt_residual": report.max_kkt_residual(),
            }
            sess.snapshot = replace(
                snap,
                handles=handles,
                weights=weights,
                weight_stats=stats,
                revision=snap.revision + 1,
            )
            return {
                "m": handles.m,
                "weight_stats": stats,
                "revision": sess.snapshot.revision,
                "cached": False,
            }
        finally:
            sess.mutation_lock.release()

    @app.post("/sessions/{session_id}/deform")
    async def deform(session_id: str, body: dict):
        snap = get_session(session_id).snapshot
        if snap.handles is None:
            raise HTTPException(409, "no handles set for this session")
        doc = _require(body, "transforms", "request")
        if len(doc) != snap.handles.m:
            raise HTTPException(422, f"expected {snap.handles.m} transforms, got {len(doc)}")
        try:
            transforms = [
                AffineTransform(
                    np.asarray(t.get("linear", np.eye(3).tolist()), dtype=float),
                    np.asarray(t.get("translation", [0, 0, 0]), dtype=float),
                )
                for t in doc
            ]
        except (DataError, ValueError, TypeError) as exc:
            raise HTTPException(422, f"invalid transforms: {exc}") from None
        deformed = lbs_deform(snap.cloud, snap.weights, transforms)
        return {"positions": deformed.positions.tolist(), "revision": snap.revision}

    @app.get("/sessions/{session_id}")
    async def session_summary(session_id: str):
        snap = get_session(session_id).snapshot
        lo, hi = snap.cloud.bbox()
        return {
            "n": snap.cloud.n,
            "energy": snap.energy_tag,
            "handles": [list(h) for h in snap.handles.handles] if snap.handles else [],
            "revision": snap.revision,
            "bbox": {"min": lo.tolist(), "max": hi.tolist()},
            "has_surface": snap.surface_triangles is not None,
            "positions": snap.cloud.positions.tolist(),
        }

    @app.get("/sessions/{session_id}/surface")
    async def session_surface(session_id: str):
        snap = get_session(session_id).snapshot
        tris = snap.surface_triangles
        return {
            "triangles": tris.tolist() if tris is not None else [],
            "revision": snap.revision,
        }

    if static_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/app", StaticFiles(directory=static_dir, html=True), name="app")

    return app

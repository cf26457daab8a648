"""Service contract: sessions, handle updates, deformation queries.

Exercises the endpoints with an HTTP test client (no browser), including
the single-flight 409 contract and revision monotonicity.
"""
import threading
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

import lapdeform.service as service_mod
from lapdeform import io, synth_shape
from lapdeform.service import create_app


@pytest.fixture(scope="module")
def mesh_files(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("svc")
    mesh = synth_shape("bar", 2, 0)
    io.save_tet_mesh(mesh, tmp / "bar.node", tmp / "bar.ele")
    io.save_point_cloud(mesh.point_cloud(), tmp / "bar.xyz")
    inline = (tmp / "bar.xyz").read_text()
    return {"dir": tmp, "mesh": mesh, "inline": inline}


@pytest.fixture
def client():
    return TestClient(create_app())


def make_session(client, mesh_files, energy=None):
    body = {
        "shape": {"inline_xyz": mesh_files["inline"]},
        "energy": energy
        or {
            "type": "fem",
            "node": str(mesh_files["dir"] / "bar.node"),
            "ele": str(mesh_files["dir"] / "bar.ele"),
        },
    }
    resp = client.post("/sessions", json=body)
    assert resp.status_code == 201, resp.text
    return resp.json()


def test_create_session_fem(client, mesh_files):
    doc = make_session(client, mesh_files)
    assert doc["n"] == mesh_files["mesh"].n
    assert doc["revision"] == 0
    assert doc["energy"] == "fem"


def test_create_session_missing_model(client, mesh_files):
    body = {
        "shape": {"inline_xyz": mesh_files["inline"]},
        "energy": {"type": "learned", "model": "/nonexistent/model.lapn"},
    }
    assert client.post("/sessions", json=body).status_code == 404


def test_create_session_count_mismatch(client, mesh_files):
    body = {
        "shape": {"inline_xyz": "0 0 0\n1 0 0\n"},
        "energy": {
            "type": "fem",
            "node": str(mesh_files["dir"] / "bar.node"),
            "ele": str(mesh_files["dir"] / "bar.ele"),
        },
    }
    assert client.post("/sessions", json=body).status_code == 422


def test_create_session_bad_inline(client, mesh_files):
    body = {
        "shape": {"inline_xyz": "0 0\n"},
        "energy": {"type": "baseline", "k": 2},
    }
    assert client.post("/sessions", json=body).status_code == 400


def test_create_session_baseline(client, mesh_files):
    doc = make_session(client, mesh_files, energy={"type": "baseline", "k": 4})
    assert doc["energy"] == "baseline"


def test_handles_and_deform_flow(client, mesh_files):
    doc = make_session(client, mesh_files)
    sid = doc["session_id"]
    n = doc["n"]

    resp = client.put(
        f"/sessions/{sid}/handles",
        json={"handles": [{"vertices": [0]}, {"vertices": [n - 1]}]},
    )
    assert resp.status_code == 200, resp.text
    body = resp.json()
    assert body["m"] == 2
    assert body["revision"] == 1
    assert body["weight_stats"]["min_row_sum_pre_norm"] > 0

    # identity transforms reproduce the source positions
    identity = {"transforms": [{"translation": [0, 0, 0]}, {"translation": [0, 0, 0]}]}
    resp = client.post(f"/sessions/{sid}/deform", json=identity)
    assert resp.status_code == 200
    positions = np.asarray(resp.json()["positions"])
    np.testing.assert_array_equal(positions, mesh_files["mesh"].vertices)
    assert resp.json()["revision"] == 1  # deform does not bump revision

    # a shared translation shifts every point by exactly t
    t = [0.1, 0.2, -0.3]
    shared = {"transforms": [{"translation": t}, {"translation": t}]}
    positions = np.asarray(client.post(f"/sessions/{sid}/deform", json=shared).json()["positions"])
    np.testing.assert_allclose(positions, mesh_files["mesh"].vertices + np.asarray(t), atol=1e-12)

    # summary reflects the handle update
    summary = client.get(f"/sessions/{sid}").json()
    assert summary["revision"] == 1
    assert summary["handles"] == [[0], [n - 1]]

    # surface is available for fem sessions
    surf = client.get(f"/sessions/{sid}/surface").json()
    assert len(surf["triangles"]) > 0


def test_deform_before_handles_409(client, mesh_files):
    sid = make_session(client, mesh_files)["session_id"]
    resp = client.post(f"/sessions/{sid}/deform", json={"transforms": []})
    assert resp.status_code == 409


def test_deform_count_mismatch_422(client, mesh_files):
    doc = make_session(client, mesh_files)
    sid = doc["session_id"]
    client.put(f"/sessions/{sid}/handles", json={"handles": [{"vertices": [0]}]})
    resp = client.post(f"/sessions/{sid}/deform", json={"transforms": [{}, {}]})
    assert resp.status_code == 422


def test_invalid_handles_422(client, mesh_files):
    sid = make_session(client, mesh_files)["session_id"]
    overlapping = {"handles": [{"vertices": [0, 1]}, {"vertices": [1]}]}
    assert client.put(f"/sessions/{sid}/handles", json=overlapping).status_code == 422
    out_of_range = {"handles": [{"vertices": [10_000]}]}
    assert client.put(f"/sessions/{sid}/handles", json=out_of_range).status_code == 422


def test_unknown_session_404(client):
    assert client.get("/sessions/nope").status_code == 404
    assert client.post("/sessions/nope/deform", json={"transforms": []}).status_code == 404


def test_identical_handles_cached(client, mesh_files):
    doc = make_session(client, mesh_files)
    sid = doc["session_id"]
    n = doc["n"]
    handles = {"handles": [{"vertices": [0]}, {"vertices": [n - 1]}]}
    first = client.put(f"/sessions/{sid}/handles", json=handles).json()
    second = client.put(f"/sessions/{sid}/handles", json=handles).json()
    assert first["revision"] == 1
    assert second["cached"] is True
    assert second["revision"] == 1  # identical re-PUT is a no-op, not a mutation
    different = {"handles": [{"vertices": [1]}, {"vertices": [n - 1]}]}
    third = client.put(f"/sessions/{sid}/handles", json=different).json()
    assert third["revision"] == 2  # real updates always bump


def test_put_single_flight_409(client, mesh_files, monkeypatch):
    doc = make_session(client, mesh_files)
    sid = doc["session_id"]
    n = doc["n"]

    real_solve = service_mod.solve_bbw

    def slow_solve(*args, **kwargs):
        time.sleep(0.8)
        return real_solve(*args, **kwargs)

    monkeypatch.setattr(service_mod, "solve_bbw", slow_solve)

    statuses = {}

    def first_put():
        resp = client.put(
            f"/sessions/{sid}/handles",
            json={"handles": [{"vertices": [0]}, {"vertices": [n - 1]}]},
        )
        statuses["first"] = resp.status_code

    thread = threading.Thread(target=first_put)
    thread.start()
    time.sleep(0.25)  # let the slow solve take the lock
    resp = client.put(
        f"/sessions/{sid}/handles",
        json={"handles": [{"vertices": [1]}, {"vertices": [n - 2]}]},
    )
    assert resp.status_code == 409
    thread.join()
    assert statuses["first"] == 200


def test_concurrent_deforms_identical(client, mesh_files):
    doc = make_session(client, mesh_files)
    sid = doc["session_id"]
    n = doc["n"]
    client.put(f"/sessions/{sid}/handles", json={"handles": [{"vertices": [0]}, {"vertices": [n - 1]}]})
    body = {"transforms": [{"translation": [0.2, 0, 0]}, {"translation": [0, 0.1, 0]}]}
    results = {}

    def query(tag):
        results[tag] = client.post(f"/sessions/{sid}/deform", json=body).json()["positions"]

    threads = [threading.Thread(target=query, args=(i,)) for i in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    base = results[0]
    for i in range(1, 4):
        assert results[i] == base

import json

import numpy as np
import pytest
from fastapi.testclient import TestClient

from factorseg.service.app import app

from conftest import simulate


@pytest.fixture(scope="module")
def client():
    return TestClient(app)


def small_payload(seed=0, T=80, p=8, cps=(40,)):
    sim = simulate(p=p, T=T, changepoints=cps, seed=seed)
    return sim.data.values.tolist()


FAST = dict(tolerance=1e-4, max_iterations=300)


class TestHealth:
    def test_health(self, client):
        body = client.get("/health").json()
        assert body["status"] == "ok"
        assert "version" in body


class TestRank:
    def test_rank_endpoint(self, client):
        data = small_payload(seed=1, cps=())
        r = client.post("/rank", json={"data": data, "options": {"nruns": 4, "seed": 1, **FAST}})
        assert r.status_code == 200
        body = r.json()
        assert body["rank"] >= 2
        assert isinstance(body["diagnostics"], list) and body["diagnostics"]

    def test_rank_rejects_bad_matrix(self, client):
        r = client.post("/rank", json={"data": [[1.0, -2.0], [3.0, 4.0]], "options": {"nruns": 2}})
        assert r.status_code == 422
        assert "positive" in r.json()["detail"]


class TestDetect:
    def test_detect_matches_library(self, client):
        from factorseg import DetectionConfig, detect_cps

        data = small_payload(seed=3, T=120, p=10, cps=(60,))
        req = {
            "data": data, "mindist": 25, "nruns": 4, "nreps": 8, "rank": 2,
            "seed": 9, **FAST,
        }
        r = client.post("/detect", json=req)
        assert r.status_code == 200
        body = r.json()
        cfg = DetectionConfig(
            mindist=25, nruns=4, nreps=8, rank=2, master_seed=9,
            tolerance=1e-4, max_iterations=300,
        )
        rep = detect_cps(np.asarray(data), cfg)
        assert body["rank"] == rep.rank_used
        assert [(c["T"], c["stat_test"]) for c in body["change_points"]] == [
            (row.index, row.stat_test) for row in rep.rows
        ]
        assert isinstance(body["log"], list) and body["log"]

    def test_detect_stream_events(self, client):
        data = small_payload(seed=4, T=100, p=8, cps=(50,))
        req = {"data": data, "mindist": 25, "nruns": 3, "nreps": 6, "rank": 2, "seed": 2, **FAST}
        events = []
        with client.stream("POST", "/detect/stream", json=req) as resp:
            assert resp.status_code == 200
            for line in resp.iter_lines():
                if line.strip():
                    events.append(json.loads(line))
        kinds = [e["event"] for e in events]
        assert kinds[-1] == "result"
        assert all(k == "progress" for k in kinds[:-1])
        assert len(kinds) > 3
        # the streamed result equals the plain endpoint's result
        plain = client.post("/detect", json=req).json()
        assert events[-1]["payload"]["change_points"] == plain["change_points"]

    def test_detect_alpha_booleans(self, client):
        data = small_payload(seed=5, T=120, p=10, cps=(60,))
        req = {
            "data": data, "mindist": 25, "nruns": 4, "nreps": 8, "rank": 2,
            "alpha": 0.05, "seed": 1, **FAST,
        }
        body = client.post("/detect", json=req).json()
        for row in body["change_points"]:
            assert isinstance(row["stat_test"], bool)


class TestNetwork:
    def test_segments_and_matrix_shape(self, client):
        data = small_payload(seed=6, T=100, p=8, cps=(50,))
        req = {
            "data": data, "lambda_spec": 2, "rank": 2, "nruns": 3,
            "changepoints": [50], "seed": 0, **FAST,
        }
        body = client.post("/network", json=req).json()
        starts = [(s["start"], s["end"]) for s in body["segments"]]
        assert starts == [(1, 50), (51, 100)]
        M = np.array(body["segments"][0]["adjacencies"][0]["matrix"])
        assert M.shape == (8, 8)
        assert np.array_equal(M, M.T)

    def test_lambda_vector(self, client):
        data = small_payload(seed=7, T=80, p=8, cps=())
        req = {"data": data, "lambda_spec": [0.3, 0.7], "rank": 2, "nruns": 3, "seed": 0, **FAST}
        body = client.post("/network", json=req).json()
        assert len(body["segments"][0]["adjacencies"]) == 2

    def test_bad_lambda(self, client):
        data = small_payload(seed=8, T=80, p=8, cps=())
        req = {"data": data, "lambda_spec": -3, "rank": 2, "nruns": 3, **FAST}
        assert client.post("/network", json=req).status_code == 422


class TestSimulate:
    def test_simulate_deterministic(self, client):
        req = {"p": 8, "T": 40, "changepoints": [20], "seed": 7}
        a = client.post("/simulate", json=req).json()
        b = client.post("/simulate", json=req).json()
        assert a == b
        assert len(a["data"]) == 40 and len(a["data"][0]) == 8
        assert a["changepoints"] == [20]
        assert len(a["labels"]) == 2

    def test_simulate_validation(self, client):
        assert client.post("/simulate", json={"p": 8, "T": 40, "changepoints": [99]}).status_code == 422


class TestExport:
    def test_export_and_filter(self, client):
        adjacency = [[0, 1, 0], [1, 0, 1], [0, 1, 0]]
        atlas = [
            {"community": "Visual", "x": 1, "y": 2, "z": 3},
            {"community": "None", "x": 4, "y": 5, "z": 6},
            {"community": "Visual", "x": 7, "y": 8, "z": 9},
        ]
        body = client.post("/export", json={"adjacency": adjacency, "atlas": atlas}).json()
        assert len(body["nodes"]) == 3 and len(body["edges"]) == 2
        filtered = client.post(
            "/export",
            json={"adjacency": adjacency, "atlas": atlas, "communities": ["Visual"]},
        ).json()
        assert [n["id"] for n in filtered["nodes"]] == [1, 3]
        assert filtered["edges"] == []

    def test_export_mismatch(self, client):
        r = client.post(
            "/export",
            json={"adjacency": [[0, 1], [1, 0]], "atlas": [{"community": None, "x": 0, "y": 0, "z": 0}]},
        )
        assert r.status_code == 422

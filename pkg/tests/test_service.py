"""HTTP surface: every endpoint exercised with the worked examples."""
import warnings

import pytest

with warnings.catch_warnings():
    warnings.simplefilter("ignore", DeprecationWarning)
    from fastapi.testclient import TestClient

from kanturn.service import app

client = TestClient(app)

INTRO_PROBLEM = {
    "space": {"labels": ["R", "G", "B"]},
    "metric": "discrete",
    "urns": {"u1": {"G": 8, "B": 2}, "u2": {"R": 5, "G": 4, "B": 1}},
    "dists": {},
}

EIGHT_POINT_PROBLEM = {
    "space": {"labels": list(range(8))},
    "metric": "numeric",
    "urns": {},
    "dists": {
        "w": {"0": "1/2", "4": "1/2"},
        "w2": {"2": "1/8", "3": "1/8", "6": "1/8", "7": "5/8"},
    },
}


def test_healthz():
    assert client.get("/healthz").json() == {"status": "ok"}


def test_distance_between_urns():
    resp = client.post("/distance", json={"problem": INTRO_PROBLEM,
                                          "left": "u1", "right": "u2"})
    assert resp.status_code == 200
    data = resp.json()
    assert data["kind"] == "urns"
    assert data["cost"] == "1/2"
    assert sum(cell["count"] for cell in data["integer_coupling"]) == 10
    assert data["pot_p"] and data["witness_q"]


def test_distance_between_dists():
    resp = client.post("/distance", json={"problem": EIGHT_POINT_PROBLEM,
                                          "left": "w", "right": "w2"})
    data = resp.json()
    assert data["kind"] == "dists"
    assert data["cost"] == "15/4"
    assert data["integer_coupling"] is None
    weights = {(c["left"], c["right"]): c["weight"] for c in data["coupling"]}
    assert sum(int(w.split("/")[0]) / int(w.split("/")[1]) for w in weights.values()) == 1


def test_distance_kind_mismatch():
    problem = {**INTRO_PROBLEM, "dists": {"w": {"G": "1"}}}
    resp = client.post("/distance", json={"problem": problem, "left": "u1", "right": "w"})
    assert resp.status_code == 400
    assert "kind" in resp.json()["detail"]


def test_distance_unknown_name():
    resp = client.post("/distance", json={"problem": INTRO_PROBLEM,
                                          "left": "u1", "right": "zz"})
    assert resp.status_code == 400


def test_draw_rows():
    resp = client.post("/draw", json={"problem": INTRO_PROBLEM, "mode": "hg",
                                      "source": "u1", "k": 2})
    data = resp.json()
    rows = {tuple(map(tuple, r["draw"])): r["prob"] for r in data["rows"]}
    assert rows[(("G", 2),)] == "28/45"
    assert rows[(("B", 1), ("G", 1))] == "16/45"
    assert rows[(("B", 2),)] == "1/45"


def test_draw_overdraw_is_400():
    resp = client.post("/draw", json={"problem": INTRO_PROBLEM, "mode": "hg",
                                      "source": "u1", "k": 11})
    assert resp.status_code == 400
    assert "overdraw" in resp.json()["detail"]


def test_draw_mode_source_mismatch():
    resp = client.post("/draw", json={"problem": INTRO_PROBLEM, "mode": "mn",
                                      "source": "u1", "k": 2})
    assert resp.status_code == 400


def test_isometry():
    resp = client.post("/isometry", json={"problem": INTRO_PROBLEM, "mode": "hg",
                                          "left": "u1", "right": "u2", "k": 2})
    data = resp.json()
    assert data == {"mode": "hg", "k": 2, "base": "1/2", "nested": "1/2",
                    "matched": True}


def test_sweep_urn():
    resp = client.post("/sweep/urn", json={"problem": INTRO_PROBLEM, "urn": "u1",
                                           "k": 2, "schedule": [1, 10, 100, 1000]})
    data = resp.json()
    assert [r["parameter"] for r in data["rows"]] == [1, 10, 100, 1000]
    assert data["rows"][0]["hg_distance"] == "4/225"
    assert data["checks"] == [{"name": "law-of-large-urns", "ok": True, "detail": ""}]
    assert data["csv"].startswith("parameter,hg_distance")


def test_sweep_urn_check_failure_is_still_200():
    resp = client.post("/sweep/urn", json={"problem": INTRO_PROBLEM, "urn": "u1",
                                           "k": 2, "schedule": [1, 2]})
    data = resp.json()
    assert resp.status_code == 200
    assert data["checks"][0]["ok"] is False
    assert "hg_distance" in data["checks"][0]["detail"]


COIN_PROBLEM = {
    "space": {"labels": ["a", "b"]},
    "metric": "discrete",
    "urns": {},
    "dists": {"coin": {"a": "1/2", "b": "1/2"}},
}


def test_sweep_draw():
    resp = client.post("/sweep/draw", json={"problem": COIN_PROBLEM, "dist": "coin",
                                            "k_schedule": [1, 2, 4, 8]})
    data = resp.json()
    assert data["rows"][0]["tvd_value"] == "1/2"
    assert data["rows"][1]["tvd_value"] == "1/4"
    assert data["checks"][0]["ok"] is True


def test_sweep_draw_default_schedule():
    resp = client.post("/sweep/draw", json={"problem": COIN_PROBLEM, "dist": "coin"})
    data = resp.json()
    assert [r["parameter"] for r in data["rows"]] == list(range(1, 33))


def test_sweep_urn_default_schedule():
    resp = client.post("/sweep/urn", json={"problem": INTRO_PROBLEM, "urn": "u1",
                                           "k": 2})
    data = resp.json()
    assert [r["parameter"] for r in data["rows"]] == [1, 2, 5, 10, 20, 50, 100,
                                                      200, 500, 1000]
    assert data["checks"][0]["ok"] is True


def test_polya_dirichlet():
    problem = {
        "space": {"labels": ["a", "b"]},
        "metric": "discrete",
        "urns": {"u": {"a": 1, "b": 1}},
        "dists": {},
    }
    resp = client.post("/polya-dirichlet", json={
        "problem": problem, "urn": "u", "k": 32, "samples": 20000, "seed": 42,
        "grid_max": 2, "grid_samples": 200})
    data = resp.json()
    assert data["exact_validity"] == "17/66"
    assert abs(data["mc_mean"] - 0.25) < 0.01
    assert data["checks"][0]["ok"] is True
    assert len(data["grid"]) == 4
    assert data["csv"].startswith("# distance=tvd samples=200 seed=42")


def test_validation_error_is_422():
    resp = client.post("/draw", json={"problem": INTRO_PROBLEM, "mode": "hg",
                                      "source": "u1", "k": 2, "bogus": 1})
    assert resp.status_code == 422


@pytest.mark.parametrize("path", ["/distance", "/draw", "/isometry",
                                  "/sweep/urn", "/sweep/draw", "/polya-dirichlet"])
def test_endpoints_reject_empty_bodies(path):
    assert client.post(path, json={}).status_code == 422

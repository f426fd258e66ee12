import json
import random
import threading
from urllib.parse import quote

import pytest
from fastapi.testclient import TestClient

from roadsurvey import damagemap, maintplan
from roadsurvey.geoalign import read_aligned_jsonl
from roadsurvey.netgraph import load_graph
from roadsurvey.service import ProjectStore, create_app

import synthfix


@pytest.fixture(scope="module")
def project(tmp_path_factory):
    root = tmp_path_factory.mktemp("svc")
    synthfix.build_project(root)
    return root


@pytest.fixture()
def client(project):
    return TestClient(create_app(project))


def _post_verdict(client, damage_id, body):
    # damage ids contain "#", which must be percent-encoded in a URL path
    return client.post(f"/api/damages/{quote(damage_id, safe='')}/verdict", json=body)


def _edge_severities(client):
    doc = json.loads(client.get("/api/network").content)
    return {f["properties"]["edge_id"]: f["properties"] for f in doc["features"]}


def test_network_has_one_feature_per_edge(project, client):
    g = load_graph(project / "graph.json")
    resp = client.get("/api/network")
    assert resp.status_code == 200
    doc = json.loads(resp.content)
    assert doc["type"] == "FeatureCollection"
    assert len(doc["features"]) == len(g.edges)


def test_network_matches_damagemap_snapshot(project, client):
    g = load_graph(project / "graph.json")
    aligned = read_aligned_jsonl(project / "aligned.jsonl")
    detections = damagemap.ingest_detections(project / "detections.jsonl")
    verdicts = damagemap.read_verdicts(project / "verdicts.jsonl")
    effective = damagemap.effective_detections(detections, verdicts)
    severities, _ = damagemap.edge_severity(effective, aligned, g)
    got = _edge_severities(client)
    for eid, s in severities.items():
        assert got[eid]["severity"] == pytest.approx(s.severity)
        assert got[eid]["damage_count"] == s.damage_count
        assert "name" in got[eid]


def test_network_unloaded_project_returns_503(tmp_path):
    client = TestClient(create_app(tmp_path / "nothing"))
    assert client.get("/api/network").status_code == 503


def test_damages_listing_and_filters(client):
    all_items = client.get("/api/damages").json()
    assert all_items
    sample = all_items[0]
    assert set(sample) >= {"damage_id", "label", "score", "lat", "lon", "image_id", "edge_id", "verdict"}

    boxed = client.get("/api/damages", params={"bbox": "134.9,34.9,135.1,35.1"}).json()
    assert boxed == all_items
    empty = client.get("/api/damages", params={"bbox": "10,10,11,11"}).json()
    assert empty == []

    d40 = client.get("/api/damages", params={"label": "D40"}).json()
    assert all(item["label"] == "D40" for item in d40)
    relabeled = [item for item in d40 if item["verdict"] == "relabeled"]
    assert relabeled, "fixture relabels one detection to D40"

    assert client.get("/api/damages", params={"bbox": "1,2,3"}).status_code == 400
    assert client.get("/api/damages", params={"bbox": "3,1,2,2"}).status_code == 400
    assert client.get("/api/damages", params={"label": "D77"}).status_code == 400


def test_image_serving_and_traversal_rejection(client):
    items = client.get("/api/damages").json()
    image_id = items[0]["image_id"]
    resp = client.get(f"/api/images/{image_id}")
    assert resp.status_code == 200
    assert resp.headers["content-type"] == "image/jpeg"
    assert resp.content.startswith(b"\xff\xd8")

    assert client.get("/api/images/zzz-does-not-exist").status_code == 404
    assert client.get("/api/images/..%2F..%2Fetc%2Fpasswd").status_code == 400
    assert client.get("/api/images/has space").status_code == 400


def test_verdict_validation(client):
    items = client.get("/api/damages").json()
    did = items[0]["damage_id"]
    assert client.post("/api/damages/nope/verdict", json={"status": "rejected", "author": "t"}).status_code == 404
    assert _post_verdict(client, did, {"status": "relabeled", "author": "t"}).status_code == 422
    assert (
        _post_verdict(client, did, {"status": "confirmed", "corrected_label": "D00", "author": "t"}).status_code
        == 422
    )
    assert _post_verdict(client, did, {"status": "bogus", "author": "t"}).status_code == 422


def test_reject_drops_edge_severity_to_zero(tmp_path):
    root = synthfix.build_project(tmp_path / "p", with_images=False)
    (root / "verdicts.jsonl").unlink()  # start with no verdicts at all
    client = TestClient(create_app(root))
    severities = _edge_severities(client)
    items = client.get("/api/damages").json()
    per_edge = {}
    for item in items:
        per_edge.setdefault(item["edge_id"], []).append(item)
    single = next(eid for eid, lst in per_edge.items() if len(lst) == 1)
    damage_id = per_edge[single][0]["damage_id"]
    assert severities[single]["severity"] > 0

    resp = _post_verdict(client, damage_id, {"status": "rejected", "author": "t"})
    assert resp.status_code == 200
    after = _edge_severities(client)
    assert after[single]["severity"] == 0.0
    assert after[single]["damage_count"] == 0


def test_later_verdict_wins(tmp_path):
    root = synthfix.build_project(tmp_path / "p", with_images=False)
    client = TestClient(create_app(root))
    did = client.get("/api/damages").json()[0]["damage_id"]
    _post_verdict(client, did, {"status": "rejected", "author": "t"})
    _post_verdict(client, did, {"status": "confirmed", "author": "t"})
    items = client.get("/api/damages").json()
    mine = [i for i in items if i["damage_id"] == did]
    assert mine and mine[0]["verdict"] == "confirmed"
    assert mine[0]["score"] == 1.0


def test_plan_endpoint_passthrough(project, client):
    g = load_graph(project / "graph.json")
    aligned = read_aligned_jsonl(project / "aligned.jsonl")
    detections = damagemap.ingest_detections(project / "detections.jsonl")
    verdicts = damagemap.read_verdicts(project / "verdicts.jsonl")
    effective = damagemap.effective_detections(detections, verdicts)
    costs = damagemap.edge_cost(effective, aligned, g)
    cfg = json.loads((project / "config.json").read_text())
    root = min(n.id for n in g.nodes)
    ag = maintplan.augment(
        g, costs, nav_speed_s_per_m=cfg["nav_speed_s_per_m"], root=root, maint_s_per_m=cfg["maint_s_per_m"]
    )
    plan, exact = maintplan.solve(ag, maintplan.Budget(T=900.0), exact_limit=cfg["exact_limit"])
    want = maintplan.plan_to_dict(plan, exact)

    resp = client.get("/api/plan", params={"T": 900.0, "root": root})
    assert resp.status_code == 200
    assert resp.json() == want


def test_plan_endpoint_validation(client, project):
    g = load_graph(project / "graph.json")
    root = min(n.id for n in g.nodes)
    assert client.get("/api/plan", params={"T": -5, "root": root}).status_code == 400
    assert client.get("/api/plan", params={"T": 100, "root": 424242}).status_code == 404
    tiny = client.get("/api/plan", params={"T": 1e-3, "root": root}).json()
    assert tiny["path"] == []
    assert tiny["total_cost"] == 0.0


def test_plan_cost_never_increases_after_rejection(tmp_path):
    root_dir = synthfix.build_project(tmp_path / "p", with_images=False)
    client = TestClient(create_app(root_dir))
    g = load_graph(root_dir / "graph.json")
    root = min(n.id for n in g.nodes)
    before = client.get("/api/plan", params={"T": 900.0, "root": root}).json()
    did = client.get("/api/damages").json()[0]["damage_id"]
    _post_verdict(client, did, {"status": "rejected", "author": "t"})
    after = client.get("/api/plan", params={"T": 900.0, "root": root}).json()
    assert after["total_cost"] <= before["total_cost"] + 1e-9


def test_restart_replays_verdict_log_byte_identically(tmp_path):
    root = synthfix.build_project(tmp_path / "p", with_images=False)
    rng = random.Random(17)
    client = TestClient(create_app(root))
    damage_ids = [i["damage_id"] for i in client.get("/api/damages").json()]
    for k in range(25):
        did = rng.choice(damage_ids)
        status = rng.choice(("confirmed", "rejected", "relabeled"))
        body = {"status": status, "author": f"r{k}"}
        if status == "relabeled":
            body["corrected_label"] = rng.choice(("D00", "D10", "D20", "D40"))
        assert _post_verdict(client, did, body).status_code == 200
    before = client.get("/api/network").content

    fresh = TestClient(create_app(root))  # new process state over the same files
    assert fresh.get("/api/network").content == before


def test_concurrent_verdict_posts_all_persist(tmp_path):
    root = synthfix.build_project(tmp_path / "p", with_images=False)
    (root / "verdicts.jsonl").unlink()
    client = TestClient(create_app(root))
    damage_ids = [i["damage_id"] for i in client.get("/api/damages").json()][:12]
    statuses = []

    def post(did):
        r = _post_verdict(client, did, {"status": "confirmed", "author": "t"})
        statuses.append(r.status_code)

    threads = [threading.Thread(target=post, args=(d,)) for d in damage_ids]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert statuses == [200] * len(damage_ids)
    lines = (root / "verdicts.jsonl").read_text().strip().splitlines()
    assert len(lines) == len(damage_ids)
    assert {json.loads(ln)["damage_id"] for ln in lines} == set(damage_ids)


def test_get_endpoints_are_side_effect_free(client):
    a = client.get("/api/network").content
    client.get("/api/damages")
    client.get("/api/damages", params={"label": "D20"})
    b = client.get("/api/network").content
    assert a == b


def test_store_loads_config_defaults(project):
    store = ProjectStore(project)
    assert store.config["nav_speed_s_per_m"] == 0.1
    assert store.config["exact_limit"] == 20


def test_cors_headers_for_ui_origin(client):
    resp = client.get("/api/network", headers={"origin": "http://localhost:5173"})
    assert resp.headers.get("access-control-allow-origin") in ("*", "http://localhost:5173")

import json
from pathlib import Path

import pytest

from roadsurvey.cli import load_config, main
from roadsurvey.netgraph import save_graph

import graphs
import oracles
import synthfix


def _run(argv):
    return main(argv)


@pytest.fixture()
def inputs(tmp_path):
    synthfix.build_inputs(tmp_path, with_images=False)
    return tmp_path


def test_graph_subcommand(inputs, capsys):
    assert _run(["graph", "--osm", str(inputs / "osm.xml"), "--project", str(inputs)]) == 0
    out = capsys.readouterr().out
    assert "6 nodes" in out
    assert "15 edges" in out
    assert (inputs / "graph.json").exists()


def test_graph_missing_file(tmp_path, capsys):
    rc = _run(["graph", "--osm", str(tmp_path / "nope.xml"), "--project", str(tmp_path)])
    assert rc == 2
    assert "nope.xml" in capsys.readouterr().err


def test_graph_malformed_xml(tmp_path, capsys):
    bad = tmp_path / "bad.xml"
    bad.write_text("<osm>\n<node id='1'\n</osm>")
    rc = _run(["graph", "--osm", str(bad), "--project", str(tmp_path)])
    assert rc == 1
    assert "line" in capsys.readouterr().err


def test_route_on_cycle_reports_zero_overhead(tmp_path, capsys):
    save_graph(graphs.cycle3(), tmp_path / "graph.json")
    assert _run(["route", "--project", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "overhead: 0.0%" in out
    assert (tmp_path / "circuit.json").exists()
    gpx = (tmp_path / "route.gpx").read_bytes()
    assert oracles.gpx_structure_problems(gpx) == []


def test_route_reports_added_length(tmp_path, capsys):
    save_graph(graphs.two_node_parallel(), tmp_path / "graph.json")
    assert _run(["route", "--project", str(tmp_path), "--start", "0"]) == 0
    out = capsys.readouterr().out
    assert "added: 150.0 m" in out


def test_route_not_strongly_connected(tmp_path, capsys):
    from roadsurvey.netgraph import Edge, GeoPoint, Node, RoadGraph

    a, b = Node(0, GeoPoint(0, 0)), Node(1, GeoPoint(0, 0.001))
    g = RoadGraph(nodes=(a, b), edges=(Edge(0, 0, 1, 100.0, (a.point, b.point)),))
    save_graph(g, tmp_path / "graph.json")
    rc = _run(["route", "--project", str(tmp_path)])
    assert rc == 1
    assert "not strongly connected" in capsys.readouterr().err


def test_align_requires_graph_artifact(inputs, capsys):
    rc = _run(
        [
            "align",
            "--gps",
            str(inputs / "gps.csv"),
            "--images",
            str(inputs / "images.csv"),
            "--project",
            str(inputs / "empty"),
        ]
    )
    assert rc == 2
    assert "`graph`" in capsys.readouterr().err


def test_score_requires_align_artifact(inputs, capsys):
    assert _run(["graph", "--osm", str(inputs / "osm.xml"), "--project", str(inputs)]) == 0
    rc = _run(["score", "--project", str(inputs)])
    assert rc == 2
    assert "`align`" in capsys.readouterr().err


def test_full_pipeline(inputs, capsys):
    project = str(inputs)
    assert _run(["graph", "--osm", str(inputs / "osm.xml"), "--project", project]) == 0
    assert _run(["route", "--project", project]) == 0
    assert _run(["align", "--gps", str(inputs / "gps.csv"), "--images", str(inputs / "images.csv"), "--project", project]) == 0
    assert _run(["ingest", "--detections", str(inputs / "detections_raw.jsonl"), "--project", project]) == 0
    assert _run(["score", "--project", project]) == 0
    assert _run(["--config", str(inputs / "config.json"), "plan", "--T", "900", "--project", project]) == 0
    capsys.readouterr()

    for name in ("graph.json", "route.gpx", "aligned.jsonl", "detections.jsonl", "severity.json", "severity.geojson", "plan.json", "plan.geojson"):
        assert (inputs / name).exists(), name

    # conservation surfaced through the artifacts: severity x length sums to
    # the effective score total of detections on aligned images
    from roadsurvey import damagemap
    from roadsurvey.geoalign import read_aligned_jsonl
    from roadsurvey.netgraph import load_graph

    g = load_graph(inputs / "graph.json")
    aligned = read_aligned_jsonl(inputs / "aligned.jsonl")
    detections = damagemap.ingest_detections(inputs / "detections.jsonl")
    verdicts = damagemap.read_verdicts(inputs / "verdicts.jsonl")
    effective = damagemap.effective_detections(detections, verdicts)
    geo = json.loads((inputs / "severity.geojson").read_text())
    by_id = g.edge_by_id
    total_from_geojson = sum(
        f["properties"]["severity"] * by_id[f["properties"]["edge_id"]].distance_m
        for f in geo["features"]
    )
    aligned_ids = {r.image_id for r in aligned}
    want = sum(d.score for d in effective if d.image_id in aligned_ids)
    assert total_from_geojson == pytest.approx(want, rel=1e-9)


def test_plan_tiny_budget_prints_empty_plan(inputs, capsys):
    project = str(inputs)
    assert _run(["graph", "--osm", str(inputs / "osm.xml"), "--project", project]) == 0
    assert _run(["align", "--gps", str(inputs / "gps.csv"), "--images", str(inputs / "images.csv"), "--project", project]) == 0
    assert _run(["ingest", "--detections", str(inputs / "detections_raw.jsonl"), "--project", project]) == 0
    assert _run(["plan", "--T", "0.001", "--project", project]) == 0
    out = capsys.readouterr().out
    assert "cost 0.000000" in out
    assert "(empty)" in out
    assert json.loads((inputs / "plan.json").read_text())["path"] == []


def test_score_idempotent(inputs):
    project = str(inputs)
    assert _run(["graph", "--osm", str(inputs / "osm.xml"), "--project", project]) == 0
    assert _run(["align", "--gps", str(inputs / "gps.csv"), "--images", str(inputs / "images.csv"), "--project", project]) == 0
    assert _run(["ingest", "--detections", str(inputs / "detections_raw.jsonl"), "--project", project]) == 0
    assert _run(["score", "--project", project]) == 0
    first = (inputs / "severity.geojson").read_bytes()
    assert _run(["score", "--project", project]) == 0
    assert (inputs / "severity.geojson").read_bytes() == first


def test_config_unknown_key_rejected(tmp_path, capsys):
    cfg = tmp_path / "config.json"
    cfg.write_text('{"sigma_s": 1.0, "wat": 3}')
    rc = _run(["--config", str(cfg), "plan", "--T", "10", "--project", str(tmp_path)])
    assert rc == 2
    assert "wat" in capsys.readouterr().err


def test_config_loads_penalties(tmp_path):
    cfg = tmp_path / "config.json"
    cfg.write_text(json.dumps({"turn_penalties": {"u_turn": 99.0}, "sigma_s": 1.5}))
    loaded = load_config(cfg)
    assert loaded.turn_penalties.u_turn == 99.0
    assert loaded.sigma_s == 1.5
    assert loaded.turn_penalties.left == 2.0


def test_config_range_validation(tmp_path):
    cfg = tmp_path / "config.json"
    cfg.write_text('{"max_dist_m": -1}')
    with pytest.raises(ValueError):
        load_config(cfg)


def test_config_paths_supply_inputs(inputs, capsys):
    cfg = inputs / "cli-config.json"
    cfg.write_text(
        json.dumps({"paths": {"osm": str(inputs / "osm.xml"), "output_dir": str(inputs)}})
    )
    assert _run(["--config", str(cfg), "graph"]) == 0
    assert (inputs / "graph.json").exists()
    capsys.readouterr()


def test_config_paths_unknown_key_rejected(tmp_path, capsys):
    cfg = tmp_path / "config.json"
    cfg.write_text('{"paths": {"walrus": "x"}}')
    assert _run(["--config", str(cfg), "plan", "--T", "10"]) == 2
    assert "walrus" in capsys.readouterr().err


def test_graph_highway_class_filter(inputs, capsys):
    out = tmp = inputs / "classes"
    assert _run(["graph", "--osm", str(inputs / "osm.xml"), "--classes", "primary", "--project", str(tmp)]) == 0
    assert "0 edges" in capsys.readouterr().out
    assert _run(["graph", "--osm", str(inputs / "osm.xml"), "--classes", "residential,primary", "--project", str(out)]) == 0
    assert "15 edges" in capsys.readouterr().out


def test_plan_from_problem_json(tmp_path, capsys):
    save_graph(graphs.two_node_parallel(), tmp_path / "graph.json")
    problem = {
        "graph": "graph.json",
        "costs": {"0": 4.0, "2": 1.5},
        "maint_times": {"0": 30.0, "1": 30.0, "2": 30.0},
        "nav_speed_s_per_m": 0.05,
        "root": 0,
        "T": 100.0,
    }
    (tmp_path / "problem.json").write_text(json.dumps(problem))
    rc = _run(["plan", "--problem", str(tmp_path / "problem.json"), "--project", str(tmp_path)])
    assert rc == 0
    out = capsys.readouterr().out
    doc = json.loads((tmp_path / "plan.json").read_text())
    assert doc["exact"] is True
    assert doc["total_cost"] == pytest.approx(5.5)  # maintain 0, traverse to B->A, maintain 2
    assert "cost 5.500000" in out

"""Command-line pipeline over a project directory.

Each subcommand reads its predecessors' artifacts from the project directory
and writes its own there, so a survey is resumable and every intermediate is
inspectable: graph -> route -> align -> ingest -> score -> plan -> serve.
Exit codes: 0 success, 1 domain error, 2 usage or I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, fields
from pathlib import Path

from . import damagemap, geoalign, maintplan, netgraph, routeplan
from .errors import RoadSurveyError
from .netgraph import GeoPoint
from .routeplan import TurnPenaltyTable


@dataclass(frozen=True)
class ProjectPaths:
    osm: str | None = None
    gps: str | None = None
    images: str | None = None
    detections: str | None = None
    images_dir: str | None = None
    output_dir: str | None = None


@dataclass(frozen=True)
class ProjectConfig:
    paths: ProjectPaths = ProjectPaths()
    sigma_s: float = 2.0
    min_spacing_m: float = 10.0
    max_dist_m: float = 25.0
    clamp_tol_s: float = 1.0
    turn_penalties: TurnPenaltyTable = TurnPenaltyTable()
    nav_speed_s_per_m: float = 0.1
    maint_s_per_m: float = 60.0
    exact_limit: int = 20

    def __post_init__(self):
        if self.sigma_s < 0:
            raise ValueError("sigma_s must be >= 0")
        if self.min_spacing_m < 0:
            raise ValueError("min_spacing_m must be >= 0")
        if self.max_dist_m <= 0:
            raise ValueError("max_dist_m must be > 0")
        if self.clamp_tol_s < 0:
            raise ValueError("clamp_tol_s must be >= 0")
        if self.nav_speed_s_per_m <= 0:
            raise ValueError("nav_speed_s_per_m must be > 0")
        if self.maint_s_per_m <= 0:
            raise ValueError("maint_s_per_m must be > 0")
        if self.exact_limit < 0:
            raise ValueError("exact_limit must be >= 0")


def load_config(path: str | Path) -> ProjectConfig:
    """Read a config JSON file; unknown keys are rejected."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    known = {f.name for f in fields(ProjectConfig)}
    unknown = set(doc) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    if "turn_penalties" in doc:
        tp = doc["turn_penalties"]
        bad = set(tp) - set(routeplan.TURN_KINDS)
        if bad:
            raise ValueError(f"unknown turn_penalties keys: {sorted(bad)}")
        doc["turn_penalties"] = TurnPenaltyTable(**tp)
    if "paths" in doc:
        bad = set(doc["paths"]) - {f.name for f in fields(ProjectPaths)}
        if bad:
            raise ValueError(f"unknown paths keys: {sorted(bad)}")
        doc["paths"] = ProjectPaths(**doc["paths"])
    return ProjectConfig(**doc)


def _artifact(project: Path, name: str, produced_by: str) -> Path:
    path = project / name
    if not path.exists():
        raise SystemExit(
            _usage_error(f"missing {path}; run the `{produced_by}` subcommand first")
        )
    return path


def _usage_error(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 2


def _require_file(path_str: str) -> Path:
    path = Path(path_str)
    if not path.is_file():
        raise SystemExit(_usage_error(f"no such file: {path}"))
    return path


def _resolve_input(flag_value, cfg_value, flag_name: str) -> Path:
    value = flag_value or cfg_value
    if not value:
        raise SystemExit(_usage_error(f"{flag_name} is required (flag or config paths)"))
    return _require_file(value)


def _project_dir(args, cfg: ProjectConfig) -> Path:
    return Path(args.project or cfg.paths.output_dir or ".")


# ---------------------------------------------------------------------------
# subcommands


def cmd_graph(args, cfg: ProjectConfig) -> int:
    osm_path = _resolve_input(args.osm, cfg.paths.osm, "--osm")
    bbox = None
    if args.bbox:
        try:
            w, s, e, n = (float(v) for v in args.bbox.split(","))
        except ValueError:
            return _usage_error("--bbox must be w,s,e,n")
        bbox = (GeoPoint(s, w), GeoPoint(n, e))
    classes = set(args.classes.split(",")) if args.classes else None
    g = netgraph.parse_osm(osm_path.read_bytes(), bbox, classes)
    project = _project_dir(args, cfg)
    project.mkdir(parents=True, exist_ok=True)
    netgraph.save_graph(g, project / "graph.json")
    print(
        f"graph: {len(g.nodes)} nodes, {len(g.edges)} edges, "
        f"{netgraph.total_length_m(g):.1f} m -> {project / 'graph.json'}"
    )
    return 0


def cmd_route(args, cfg: ProjectConfig) -> int:
    project = _project_dir(args, cfg)
    graph_path = Path(args.graph) if args.graph else _artifact(project, "graph.json", "graph")
    g = netgraph.load_graph(graph_path)
    penalties = cfg.turn_penalties
    if args.penalties:
        try:
            straight, right, left, u_turn = (float(v) for v in args.penalties.split(","))
        except ValueError:
            return _usage_error("--penalties must be straight,right,left,u_turn")
        penalties = TurnPenaltyTable(straight, right, left, u_turn)
    eg = routeplan.eulerize(g)
    start = args.start if args.start is not None else min(n.id for n in g.nodes)
    circuit = routeplan.euler_circuit(eg, start, penalties)
    project.mkdir(parents=True, exist_ok=True)
    (project / "circuit.json").write_text(
        json.dumps({"start_node": circuit.start_node, "edges": list(circuit.edges)}, indent=2),
        encoding="utf-8",
    )
    (project / "route.gpx").write_bytes(routeplan.export_gpx(circuit, g))
    original = netgraph.total_length_m(g)
    print(f"original length: {original:.1f} m")
    print(f"eulerized length: {original + eg.added_length_m:.1f} m")
    print(f"added: {eg.added_length_m:.1f} m, overhead: {eg.overhead_ratio * 100.0:.1f}%")
    print(f"circuit: {len(circuit.edges)} edge traversals -> {project / 'route.gpx'}")
    return 0


def cmd_align(args, cfg: ProjectConfig) -> int:
    project = _project_dir(args, cfg)
    g = netgraph.load_graph(_artifact(project, "graph.json", "graph"))
    track = geoalign.read_gps_csv(_resolve_input(args.gps, cfg.paths.gps, "--gps"))
    images = geoalign.read_image_index_csv(_resolve_input(args.images, cfg.paths.images, "--images"))
    result = geoalign.align(
        track,
        images,
        g,
        geoalign.AlignConfig(
            sigma_s=args.sigma_s if args.sigma_s is not None else cfg.sigma_s,
            min_spacing_m=args.min_spacing_m if args.min_spacing_m is not None else cfg.min_spacing_m,
            max_dist_m=args.max_dist_m if args.max_dist_m is not None else cfg.max_dist_m,
            clamp_tol_s=args.clamp_tol_s if args.clamp_tol_s is not None else cfg.clamp_tol_s,
        ),
    )
    geoalign.write_aligned_jsonl(result.records, project / "aligned.jsonl")
    print(
        f"aligned: kept {len(result.records)} images "
        f"(dropped {result.dropped_out_of_span} out-of-span, "
        f"{result.dropped_unassigned} unassigned) -> {project / 'aligned.jsonl'}"
    )
    return 0


def cmd_ingest(args, cfg: ProjectConfig) -> int:
    detections = damagemap.ingest_detections(
        _resolve_input(args.detections, cfg.paths.detections, "--detections")
    )
    project = _project_dir(args, cfg)
    project.mkdir(parents=True, exist_ok=True)
    with open(project / "detections.jsonl", "w", encoding="utf-8") as fh:
        for d in detections:
            fh.write(
                json.dumps(
                    {
                        "damage_id": d.damage_id,
                        "image_id": d.image_id,
                        "label": d.label,
                        "bbox": list(d.bbox),
                        "score": d.score,
                    },
                    sort_keys=True,
                )
                + "\n"
            )
    total = sum(d.score for d in detections)
    print(
        f"ingested {len(detections)} detections, total score {total:.6f} "
        f"-> {project / 'detections.jsonl'}"
    )
    return 0


def _load_scored_project(project: Path):
    g = netgraph.load_graph(_artifact(project, "graph.json", "graph"))
    aligned = geoalign.read_aligned_jsonl(_artifact(project, "aligned.jsonl", "align"))
    detections = damagemap.ingest_detections(_artifact(project, "detections.jsonl", "ingest"))
    return g, aligned, detections


def cmd_score(args, cfg: ProjectConfig) -> int:
    project = _project_dir(args, cfg)
    g, aligned, detections = _load_scored_project(project)
    verdicts_path = Path(args.verdicts) if args.verdicts else project / "verdicts.jsonl"
    verdicts = damagemap.read_verdicts(verdicts_path) if verdicts_path.exists() else []
    effective = damagemap.effective_detections(detections, verdicts)
    doc = damagemap.severity_json(effective, aligned, g)
    (project / "severity.json").write_text(json.dumps(doc, indent=2), encoding="utf-8")
    geo = damagemap.severity_geojson(effective, aligned, g)
    (project / "severity.geojson").write_text(json.dumps(geo), encoding="utf-8")
    by_id = g.edge_by_id
    assigned = sum(e["severity"] * by_id[e["edge_id"]].distance_m for e in doc["edges"])
    print(f"scored {len(effective)} effective detections over {len(g.edges)} edges")
    print(f"assigned score total: {assigned:.6f} (skipped {doc['skipped_detections']} detections)")
    print(f"wrote {project / 'severity.json'} and {project / 'severity.geojson'}")
    return 0


def cmd_plan(args, cfg: ProjectConfig) -> int:
    project = _project_dir(args, cfg)
    if args.problem:
        ag, budget, flags = maintplan.load_problem(_require_file(args.problem))
        g = ag.base
        if args.T is not None:
            budget = maintplan.Budget(T=args.T, return_to_root=args.return_to_root or budget.return_to_root)
        exact_limit = flags["exact_limit"]
        inclusive = flags["inclusive"] or args.inclusive_budget
        project.mkdir(parents=True, exist_ok=True)
    else:
        if args.T is None:
            return _usage_error("--T is required")
        g, aligned, detections = _load_scored_project(project)
        verdicts_path = project / "verdicts.jsonl"
        verdicts = damagemap.read_verdicts(verdicts_path) if verdicts_path.exists() else []
        effective = damagemap.effective_detections(detections, verdicts)
        costs = damagemap.edge_cost(effective, aligned, g)
        root = args.root if args.root is not None else min(n.id for n in g.nodes)
        ag = maintplan.augment(
            g,
            costs,
            nav_speed_s_per_m=cfg.nav_speed_s_per_m,
            root=root,
            maint_s_per_m=cfg.maint_s_per_m,
        )
        budget = maintplan.Budget(T=args.T, return_to_root=args.return_to_root)
        exact_limit = cfg.exact_limit
        inclusive = args.inclusive_budget
    plan, exact = maintplan.solve(ag, budget, exact_limit=exact_limit, inclusive=inclusive)
    doc = maintplan.plan_to_dict(plan, exact)
    (project / "plan.json").write_text(json.dumps(doc, indent=2), encoding="utf-8")
    (project / "plan.geojson").write_text(
        json.dumps(maintplan.plan_geojson(plan, g)), encoding="utf-8"
    )
    solver = "exact" if exact else "heuristic"
    print(f"plan ({solver}): cost {plan.total_cost:.6f}, time {plan.total_time_s:.1f} s")
    print("steps: " + (" ".join(f"{s.edge_id}:{s.action}" for s in plan.path) or "(empty)"))
    print(f"wrote {project / 'plan.json'} and {project / 'plan.geojson'}")
    return 0


def cmd_serve(args, cfg: ProjectConfig) -> int:
    import os

    import uvicorn

    from .service import create_app

    root = args.project or os.environ.get("SURVEYD_PROJECT") or cfg.paths.output_dir or "."
    uvicorn.run(create_app(root), host=args.host, port=args.port, log_level="warning")
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="roadsurvey", description=__doc__)
    parser.add_argument("--config", help="project config JSON (flags override it)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("graph", help="parse OSM XML into graph.json")
    p.add_argument("--osm", help="OSM XML extract (or config paths.osm)")
    p.add_argument("--bbox", help="w,s,e,n bounding box filter")
    p.add_argument("--classes", help="comma-separated highway classes to keep")
    p.add_argument("--project", default=None)
    p.set_defaults(func=cmd_graph)

    p = sub.add_parser("route", help="plan the coverage circuit and export GPX")
    p.add_argument("--graph", help="graph JSON (default: <project>/graph.json)")
    p.add_argument("--start", type=int, help="start node id (default: lowest)")
    p.add_argument("--penalties", help="straight,right,left,u_turn costs")
    p.add_argument("--project", default=None)
    p.set_defaults(func=cmd_route)

    p = sub.add_parser("align", help="geo-align images against the GPS track")
    p.add_argument("--gps", help="CSV t,lat,lon (or config paths.gps)")
    p.add_argument("--images", help="CSV image_id,t (or config paths.images)")
    p.add_argument("--sigma-s", type=float, dest="sigma_s")
    p.add_argument("--min-spacing-m", type=float, dest="min_spacing_m")
    p.add_argument("--max-dist-m", type=float, dest="max_dist_m")
    p.add_argument("--clamp-tol-s", type=float, dest="clamp_tol_s")
    p.add_argument("--project", default=None)
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("ingest", help="validate and normalize detector output")
    p.add_argument("--detections", help="detections JSONL (or config paths.detections)")
    p.add_argument("--project", default=None)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("score", help="compute per-edge severity")
    p.add_argument("--verdicts", help="verdicts JSONL (default: <project>/verdicts.jsonl)")
    p.add_argument("--project", default=None)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("plan", help="optimize a maintenance plan under a time budget")
    p.add_argument("--T", type=float, help="time budget in seconds")
    p.add_argument("--root", type=int, help="root node id (default: lowest)")
    p.add_argument("--problem", help="augmented-problem JSON instead of project artifacts")
    p.add_argument("--return-to-root", action="store_true", dest="return_to_root")
    p.add_argument(
        "--inclusive-budget",
        action="store_true",
        dest="inclusive_budget",
        help="allow t(P) == T instead of the default strict t(P) < T",
    )
    p.add_argument("--project", default=None)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("serve", help="serve the project over HTTP")
    p.add_argument("--project", help="project dir (default: $SURVEYD_PROJECT)")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else ProjectConfig()
    except (ValueError, TypeError, json.JSONDecodeError) as exc:
        return _usage_error(f"bad config: {exc}")
    except OSError as exc:
        return _usage_error(str(exc))
    try:
        return args.func(args, cfg)
    except SystemExit as exc:  # raised by the missing-artifact helpers
        return int(exc.code or 0)
    except RoadSurveyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

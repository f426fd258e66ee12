"""HTTP service over a survey project directory.

A project is plain files: graph.json, aligned.jsonl, detections.jsonl, an
append-only verdicts.jsonl, an images/ directory, and an optional
config.json. The service recomputes severity synchronously on every verdict
write (projects are desk-scale), swaps in the new snapshot atomically, and
serves all reads from the last completed snapshot, so restarting and
replaying the verdict log reproduces identical responses byte for byte.
"""

from __future__ import annotations

import json
import re
import threading
import time
from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI, HTTPException, Query, Response
from fastapi.middleware.cors import CORSMiddleware

from . import damagemap, maintplan
from .damagemap import Detection, Verdict
from .geoalign import ImageRecord, read_aligned_jsonl
from .netgraph import RoadGraph, load_graph

GRAPH_FILE = "graph.json"
ALIGNED_FILE = "aligned.jsonl"
DETECTIONS_FILE = "detections.jsonl"
VERDICTS_FILE = "verdicts.jsonl"
IMAGES_DIR = "images"
CONFIG_FILE = "config.json"

_IMAGE_ID_RE = re.compile(r"^[A-Za-z0-9._-]+$")

DEFAULT_CONFIG = {
    "nav_speed_s_per_m": 0.1,
    "maint_s_per_m": 60.0,
    "exact_limit": 20,
    "cors_origins": ["*"],
}


@dataclass(frozen=True)
class Snapshot:
    graph: RoadGraph
    aligned: list[ImageRecord]
    detections: list[Detection]
    verdicts: list[Verdict]
    effective: list[Detection]
    network_geojson: bytes
    damage_points: list[dict]


class ProjectStore:
    """Files on disk plus the derived in-memory snapshot.

    Verdict appends are serialized by a lock; readers always see the last
    completed snapshot (attribute swap is atomic).
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.config = dict(DEFAULT_CONFIG)
        cfg_path = self.root / CONFIG_FILE
        if cfg_path.exists():
            self.config.update(json.loads(cfg_path.read_text(encoding="utf-8")))
        self._write_lock = threading.Lock()
        self._snapshot: Snapshot | None = None
        try:
            self._snapshot = self._load()
        except FileNotFoundError:
            self._snapshot = None

    @property
    def snapshot(self) -> Snapshot | None:
        return self._snapshot

    def _load(self) -> Snapshot:
        graph = load_graph(self.root / GRAPH_FILE)
        aligned = read_aligned_jsonl(self.root / ALIGNED_FILE)
        detections = damagemap.ingest_detections(self.root / DETECTIONS_FILE)
        verdicts_path = self.root / VERDICTS_FILE
        verdicts = damagemap.read_verdicts(verdicts_path) if verdicts_path.exists() else []
        return self._build(graph, aligned, detections, verdicts)

    def _build(self, graph, aligned, detections, verdicts) -> Snapshot:
        effective = damagemap.effective_detections(detections, verdicts)
        geojson = damagemap.severity_geojson(effective, aligned, graph)
        network_bytes = json.dumps(geojson, sort_keys=True, separators=(",", ":")).encode("utf-8")

        latest: dict[str, Verdict] = {}
        for v in verdicts:
            cur = latest.get(v.damage_id)
            if cur is None or v.t >= cur.t:
                latest[v.damage_id] = v
        by_image = {r.image_id: r for r in aligned}
        points = []
        for d in effective:
            rec = by_image.get(d.image_id)
            if rec is None or rec.point is None:
                continue
            v = latest.get(d.damage_id)
            points.append(
                {
                    "damage_id": d.damage_id,
                    "label": d.label,
                    "score": d.score,
                    "bbox": list(d.bbox),
                    "lat": rec.point.lat,
                    "lon": rec.point.lon,
                    "image_id": d.image_id,
                    "edge_id": rec.edge_id,
                    "verdict": v.status if v is not None else None,
                }
            )
        return Snapshot(
            graph=graph,
            aligned=aligned,
            detections=detections,
            verdicts=verdicts,
            effective=effective,
            network_geojson=network_bytes,
            damage_points=points,
        )

    def known_damage_ids(self) -> set[str]:
        snap = self._snapshot
        return {d.damage_id for d in snap.detections} if snap else set()

    def append_verdict(self, damage_id: str, status: str, corrected_label, author: str) -> Verdict:
        with self._write_lock:
            snap = self._snapshot
            verdict = Verdict(
                damage_id=damage_id,
                status=status,
                corrected_label=corrected_label,
                author=author,
                t=time.time(),
            )
            damagemap.append_verdict(verdict, self.root / VERDICTS_FILE)
            self._snapshot = self._build(
                snap.graph, snap.aligned, snap.detections, snap.verdicts + [verdict]
            )
            return verdict

    def image_path(self, image_id: str) -> Path | None:
        base = (self.root / IMAGES_DIR).resolve()
        for candidate in (base / image_id, base / f"{image_id}.jpg"):
            resolved = candidate.resolve()
            if resolved.is_file() and resolved.is_relative_to(base):
                return resolved
        return None


def create_app(project_root: str | Path) -> FastAPI:
    store = ProjectStore(project_root)
    app = FastAPI(title="roadsurvey service")
    app.state.store = store
    app.add_middleware(
        CORSMiddleware,
        allow_origins=store.config["cors_origins"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    def snapshot() -> Snapshot:
        snap = store.snapshot
        if snap is None:
            raise HTTPException(status_code=503, detail="project not loaded")
        return snap

    @app.get("/api/network")
    def network() -> Response:
        return Response(content=snapshot().network_geojson, media_type="application/geo+json")

    @app.get("/api/damages")
    def damages(bbox: str | None = None, label: str | None = None) -> list[dict]:
        snap = snapshot()
        points = snap.damage_points
        if bbox is not None:
            try:
                w, s, e, n = (float(v) for v in bbox.split(","))
            except ValueError:
                raise HTTPException(status_code=400, detail="bbox must be w,s,e,n")
            if w > e or s > n:
                raise HTTPException(status_code=400, detail="bbox bounds are inverted")
            points = [p for p in points if w <= p["lon"] <= e and s <= p["lat"] <= n]
        if label is not None:
            if label not in damagemap.DAMAGE_LABELS:
                raise HTTPException(status_code=400, detail=f"unknown label {label}")
            points = [p for p in points if p["label"] == label]
        return points

    # the :path converter lets encoded traversal probes (..%2Fetc%2Fpasswd)
    # reach the handler so they get a 400 instead of a router 404
    @app.get("/api/images/{image_id:path}")
    def image(image_id: str) -> Response:
        if not _IMAGE_ID_RE.match(image_id) or ".." in image_id:
            raise HTTPException(status_code=400, detail="invalid image id")
        snapshot()
        path = store.image_path(image_id)
        if path is None:
            raise HTTPException(status_code=404, detail="unknown image")
        return Response(content=path.read_bytes(), media_type="image/jpeg")

    @app.post("/api/damages/{damage_id}/verdict")
    def post_verdict(damage_id: str, body: dict) -> dict:
        snapshot()
        if damage_id not in store.known_damage_ids():
            raise HTTPException(status_code=404, detail="unknown damage")
        status = body.get("status")
        corrected = body.get("corrected_label")
        author = body.get("author")
        if status not in damagemap.VERDICT_STATUSES:
            raise HTTPException(status_code=422, detail="status must be confirmed/rejected/relabeled")
        if not isinstance(author, str) or not author:
            raise HTTPException(status_code=422, detail="author is required")
        if (status == "relabeled") != (corrected is not None):
            raise HTTPException(
                status_code=422, detail="corrected_label is required exactly for relabeled"
            )
        if corrected is not None and corrected not in damagemap.DAMAGE_LABELS:
            raise HTTPException(status_code=422, detail=f"unknown corrected_label {corrected}")
        verdict = store.append_verdict(damage_id, status, corrected, author)
        return damagemap.verdict_to_dict(verdict)

    @app.get("/api/plan")
    def plan(T: float, root: int, ret: bool = Query(False, alias="return")) -> dict:
        snap = snapshot()
        if T <= 0:
            raise HTTPException(status_code=400, detail="T must be > 0")
        if root not in snap.graph.node_by_id:
            raise HTTPException(status_code=404, detail=f"unknown root node {root}")
        costs = damagemap.edge_cost(snap.effective, snap.aligned, snap.graph)
        ag = maintplan.augment(
            snap.graph,
            costs,
            nav_speed_s_per_m=store.config["nav_speed_s_per_m"],
            root=root,
            maint_s_per_m=store.config["maint_s_per_m"],
        )
        result, exact = maintplan.solve(
            ag, maintplan.Budget(T=T, return_to_root=ret), exact_limit=store.config["exact_limit"]
        )
        return maintplan.plan_to_dict(result, exact)

    return app

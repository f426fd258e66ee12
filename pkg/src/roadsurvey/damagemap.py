"""Detector findings, human verdicts, and per-edge severity.

A detection is one detector finding on one image (label, pixel bbox,
confidence score). Reviewers may later confirm, reject, or relabel it; the
latest verdict wins, rejected detections disappear, and human-touched ones
are treated as certain (score forced to 1). Severity of an edge is the sum
of its detections' scores divided by the edge length; the undivided sum is
the maintenance cost fed to the planner.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, replace
from pathlib import Path

from .geoalign import ImageRecord
from .netgraph import RoadGraph
from .errors import SchemaError

log = logging.getLogger(__name__)

DAMAGE_LABELS = ("D00", "D10", "D20", "D40")
VERDICT_STATUSES = ("confirmed", "rejected", "relabeled")


@dataclass(frozen=True)
class Detection:
    damage_id: str
    image_id: str
    label: str
    bbox: tuple[float, float, float, float]  # x_min, y_min, x_max, y_max in pixels
    score: float

    def __post_init__(self):
        if self.label not in DAMAGE_LABELS:
            raise ValueError(f"unknown label {self.label!r}")
        x_min, y_min, x_max, y_max = self.bbox
        if not (x_min < x_max and y_min < y_max):
            raise ValueError(f"degenerate bbox {self.bbox}")
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score {self.score} outside [0, 1]")


@dataclass(frozen=True)
class Verdict:
    damage_id: str
    status: str
    author: str
    t: float
    corrected_label: str | None = None

    def __post_init__(self):
        if self.status not in VERDICT_STATUSES:
            raise ValueError(f"unknown status {self.status!r}")
        if (self.status == "relabeled") != (self.corrected_label is not None):
            raise ValueError("corrected_label is required exactly when status is relabeled")
        if self.corrected_label is not None and self.corrected_label not in DAMAGE_LABELS:
            raise ValueError(f"unknown corrected_label {self.corrected_label!r}")


@dataclass(frozen=True)
class EdgeSeverity:
    edge_id: int
    severity: float  # score sum per meter
    damage_count: int
    score_sum: float


# ---------------------------------------------------------------------------
# JSON Lines ingestion


def ingest_detections(source: bytes | str | Path) -> list[Detection]:
    """Parse a detections JSON Lines stream, one object per line.

    Records without a damage_id get `<image_id>#<line>` assigned. Any schema
    violation raises SchemaError carrying the 1-based line number.
    """
    text = _as_text(source)
    detections = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"detections line {lineno}: invalid JSON ({exc.msg})", line=lineno)
        if not isinstance(obj, dict):
            raise SchemaError(f"detections line {lineno}: expected an object", line=lineno)
        try:
            image_id = str(obj["image_id"])
            bbox = obj["bbox"]
            if not (isinstance(bbox, list) and len(bbox) == 4):
                raise ValueError("bbox must be a list of 4 numbers")
            det = Detection(
                damage_id=str(obj.get("damage_id") or f"{image_id}#{lineno}"),
                image_id=image_id,
                label=str(obj["label"]),
                bbox=tuple(float(v) for v in bbox),
                score=float(obj["score"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"detections line {lineno}: {exc}", line=lineno) from exc
        detections.append(det)
    return detections


def read_verdicts(source: bytes | str | Path) -> list[Verdict]:
    """Parse the append-only verdicts JSON Lines log, preserving order."""
    text = _as_text(source)
    verdicts = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            verdicts.append(
                Verdict(
                    damage_id=str(obj["damage_id"]),
                    status=str(obj["status"]),
                    author=str(obj["author"]),
                    t=float(obj["t"]),
                    corrected_label=obj.get("corrected_label"),
                )
            )
        except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
            raise SchemaError(f"verdicts line {lineno}: {exc}", line=lineno) from exc
    return verdicts


def append_verdict(v: Verdict, path: str | Path) -> None:
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(json.dumps(verdict_to_dict(v), sort_keys=True) + "\n")


def verdict_to_dict(v: Verdict) -> dict:
    doc = {"damage_id": v.damage_id, "status": v.status, "author": v.author, "t": v.t}
    if v.corrected_label is not None:
        doc["corrected_label"] = v.corrected_label
    return doc


def _as_text(source: bytes | str | Path) -> str:
    if isinstance(source, Path):
        return source.read_text(encoding="utf-8")
    if isinstance(source, bytes):
        return source.decode("utf-8")
    return source


# ---------------------------------------------------------------------------
# verdict application and aggregation


def effective_detections(ds: list[Detection], vs: list[Verdict]) -> list[Detection]:
    """Apply the verdict log: latest verdict per damage wins (ties go to the
    later log entry), rejected detections are dropped, confirmed and relabeled
    ones get score 1.0, and unverdicted detections pass through unchanged.
    """
    known = {d.damage_id for d in ds}
    latest: dict[str, Verdict] = {}
    order: dict[str, int] = {}
    for i, v in enumerate(vs):
        if v.damage_id not in known:
            log.warning("verdict for unknown damage_id %r skipped", v.damage_id)
            continue
        cur = latest.get(v.damage_id)
        if cur is None or (v.t, i) >= (cur.t, order[v.damage_id]):
            latest[v.damage_id] = v
            order[v.damage_id] = i
    out = []
    for d in ds:
        v = latest.get(d.damage_id)
        if v is None:
            out.append(d)
        elif v.status == "rejected":
            continue
        elif v.status == "confirmed":
            out.append(replace(d, score=1.0))
        else:  # relabeled
            out.append(replace(d, label=v.corrected_label, score=1.0))
    return out


def edge_severity(
    ds: list[Detection], aligned: list[ImageRecord], g: RoadGraph
) -> tuple[dict[int, EdgeSeverity], int]:
    """Aggregate detection scores onto edges via their images.

    Every edge of the graph appears in the result, severity 0 when nothing
    was detected on it. Detections whose image is not among the aligned
    records (or carries no edge) are skipped; the skip count is returned.
    """
    by_image = {r.image_id: r for r in aligned}
    sums: dict[int, float] = {e.id: 0.0 for e in g.edges}
    counts: dict[int, int] = {e.id: 0 for e in g.edges}
    skipped = 0
    for d in ds:
        rec = by_image.get(d.image_id)
        if rec is None or rec.edge_id is None or rec.edge_id not in sums:
            skipped += 1
            continue
        sums[rec.edge_id] += d.score
        counts[rec.edge_id] += 1
    result = {
        e.id: EdgeSeverity(
            edge_id=e.id,
            severity=sums[e.id] / e.distance_m,
            damage_count=counts[e.id],
            score_sum=sums[e.id],
        )
        for e in g.edges
    }
    return result, skipped


def edge_cost(
    ds: list[Detection], aligned: list[ImageRecord], g: RoadGraph
) -> dict[int, float]:
    """Maintenance cost per edge: the undivided score sum (0 where empty)."""
    severities, _ = edge_severity(ds, aligned, g)
    return {eid: s.score_sum for eid, s in severities.items()}


# ---------------------------------------------------------------------------
# output documents


def severity_geojson(
    ds: list[Detection], aligned: list[ImageRecord], g: RoadGraph
) -> dict:
    """GeoJSON FeatureCollection with one LineString per edge.

    Properties carry edge_id, severity, damage_count, per-class counts, and
    the road name; coordinates are GeoJSON [lon, lat] order.
    """
    severities, _ = edge_severity(ds, aligned, g)
    by_image = {r.image_id: r for r in aligned}
    class_counts: dict[int, dict[str, int]] = {
        e.id: {label: 0 for label in DAMAGE_LABELS} for e in g.edges
    }
    for d in ds:
        rec = by_image.get(d.image_id)
        if rec is None or rec.edge_id is None or rec.edge_id not in class_counts:
            continue
        class_counts[rec.edge_id][d.label] += 1
    features = []
    for e in sorted(g.edges, key=lambda e: e.id):
        s = severities[e.id]
        features.append(
            {
                "type": "Feature",
                "geometry": {
                    "type": "LineString",
                    "coordinates": [[p.lon, p.lat] for p in e.geometry],
                },
                "properties": {
                    "edge_id": e.id,
                    "severity": s.severity,
                    "damage_count": s.damage_count,
                    "class_counts": class_counts[e.id],
                    "name": e.name,
                },
            }
        )
    return {"type": "FeatureCollection", "features": features}


def severity_json(ds: list[Detection], aligned: list[ImageRecord], g: RoadGraph) -> dict:
    """Plain per-edge severity summary plus the skipped-detections count."""
    severities, skipped = edge_severity(ds, aligned, g)
    return {
        "edges": [
            {
                "edge_id": s.edge_id,
                "severity": s.severity,
                "damage_count": s.damage_count,
                "score_sum": s.score_sum,
            }
            for _, s in sorted(severities.items())
        ],
        "skipped_detections": skipped,
    }

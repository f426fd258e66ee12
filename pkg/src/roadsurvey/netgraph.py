"""Directed road multigraph parsed from OpenStreetMap XML, plus the geodesy
primitives (great-circle distance, bearings, local planar coordinates) that
every other module builds on.

Conventions baked in here:
  * only ways tagged ``highway=*`` are roads; each consecutive node pair of a
    way becomes one directed edge, and ways without ``oneway=yes`` also yield
    the reversed edges;
  * way-interior nodes become graph nodes (no degree-2 chain collapsing);
  * all distances are great-circle meters on a sphere of IUGG mean radius.
"""

from __future__ import annotations

import json
import math
import xml.etree.ElementTree as ET
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

from .errors import ParseError

EARTH_RADIUS_M = 6_371_008.8  # IUGG mean radius


@dataclass(frozen=True)
class GeoPoint:
    """WGS84 coordinate pair in decimal degrees."""

    lat: float
    lon: float

    def __post_init__(self):
        if not (math.isfinite(self.lat) and math.isfinite(self.lon)):
            raise ValueError(f"non-finite coordinate ({self.lat}, {self.lon})")
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude {self.lat} outside [-90, 90]")
        if not -180.0 <= self.lon <= 180.0:
            raise ValueError(f"longitude {self.lon} outside [-180, 180]")


@dataclass(frozen=True)
class Node:
    id: int
    point: GeoPoint


@dataclass(frozen=True)
class Edge:
    """One directed road segment.

    ``geometry`` is the ordered polyline from the source node's point to the
    destination node's point; ``distance_m`` is its great-circle length.
    """

    id: int
    src: int
    dst: int
    distance_m: float
    geometry: tuple[GeoPoint, ...]
    name: str | None = None

    def __post_init__(self):
        if len(self.geometry) < 2:
            raise ValueError(f"edge {self.id}: geometry needs at least 2 points")
        if not self.distance_m > 0:
            raise ValueError(f"edge {self.id}: distance_m must be > 0, got {self.distance_m}")


@dataclass(frozen=True)
class RoadGraph:
    """Directed multigraph; parallel edges and self-loops are allowed."""

    nodes: tuple[Node, ...]
    edges: tuple[Edge, ...]

    def __post_init__(self):
        node_ids = [n.id for n in self.nodes]
        if len(set(node_ids)) != len(node_ids):
            raise ValueError("duplicate node ids")
        edge_ids = [e.id for e in self.edges]
        if len(set(edge_ids)) != len(edge_ids):
            raise ValueError("duplicate edge ids")
        points = {n.id: n.point for n in self.nodes}
        for e in self.edges:
            if e.src not in points or e.dst not in points:
                raise ValueError(f"edge {e.id} references missing node {e.src}->{e.dst}")
            for actual, want, which in (
                (e.geometry[0], points[e.src], "start"),
                (e.geometry[-1], points[e.dst], "end"),
            ):
                if abs(actual.lat - want.lat) > 1e-9 or abs(actual.lon - want.lon) > 1e-9:
                    raise ValueError(
                        f"edge {e.id}: geometry {which} does not coincide with its node"
                    )

    @cached_property
    def node_by_id(self) -> dict[int, Node]:
        return {n.id: n for n in self.nodes}

    @cached_property
    def edge_by_id(self) -> dict[int, Edge]:
        return {e.id: e for e in self.edges}

    @cached_property
    def out_edges(self) -> dict[int, tuple[Edge, ...]]:
        adj: dict[int, list[Edge]] = {n.id: [] for n in self.nodes}
        for e in self.edges:
            adj[e.src].append(e)
        return {nid: tuple(sorted(es, key=lambda e: e.id)) for nid, es in adj.items()}


# ---------------------------------------------------------------------------
# geodesy primitives


def haversine_m(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in meters on the sphere of radius EARTH_RADIUS_M."""
    phi1 = math.radians(a.lat)
    phi2 = math.radians(b.lat)
    dphi = phi2 - phi1
    dlam = math.radians(b.lon - a.lon)
    s = math.sin(dphi / 2.0) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(s)))


def polyline_length_m(points: tuple[GeoPoint, ...]) -> float:
    return sum(haversine_m(points[i], points[i + 1]) for i in range(len(points) - 1))


def bearing_deg(a: GeoPoint, b: GeoPoint) -> float:
    """Forward azimuth from a to b, degrees clockwise from north in [0, 360)."""
    phi1 = math.radians(a.lat)
    phi2 = math.radians(b.lat)
    dlam = math.radians(b.lon - a.lon)
    x = math.sin(dlam) * math.cos(phi2)
    y = math.cos(phi1) * math.sin(phi2) - math.sin(phi1) * math.cos(phi2) * math.cos(dlam)
    return math.degrees(math.atan2(x, y)) % 360.0


def local_xy(p: GeoPoint, ref_lat: float) -> tuple[float, float]:
    """Equirectangular plane coordinates in meters, scaled at ref_lat.

    x = lon * cos(ref_lat) * R and y = lat * R, angles in radians. Accurate at
    sub-kilometer scales, which is all the point-to-edge matching needs.
    """
    x = math.radians(p.lon) * math.cos(math.radians(ref_lat)) * EARTH_RADIUS_M
    y = math.radians(p.lat) * EARTH_RADIUS_M
    return x, y


# ---------------------------------------------------------------------------
# OSM parsing


def parse_osm(
    data: bytes | str,
    bbox_filter: tuple[GeoPoint, GeoPoint] | None = None,
    highway_classes: set[str] | None = None,
) -> RoadGraph:
    """Parse an OSM XML extract into a directed road multigraph.

    Ways tagged ``highway=*`` are kept; ``highway_classes`` narrows that to
    the given tag values, and with ``bbox_filter=(sw, ne)`` a way is kept only
    if all of its nodes fall inside the box. Nodes not referenced by any kept
    way are dropped. Ways without ``oneway=yes`` produce both directions.
    Zero-length node pairs (repeated coordinates) are skipped because edges
    must have positive length.

    Raises ParseError with a line number on malformed XML, and ParseError
    naming the way id when a way references a node the document lacks.
    """
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        line, col = exc.position
        raise ParseError(f"malformed OSM XML at line {line}, column {col}", line=line) from exc

    points: dict[int, GeoPoint] = {}
    for el in root.iter("node"):
        nid = int(el.attrib["id"])
        points[nid] = GeoPoint(float(el.attrib["lat"]), float(el.attrib["lon"]))

    def in_bbox(p: GeoPoint) -> bool:
        if bbox_filter is None:
            return True
        sw, ne = bbox_filter
        return sw.lat <= p.lat <= ne.lat and sw.lon <= p.lon <= ne.lon

    edges: list[Edge] = []
    used_nodes: set[int] = set()
    next_edge_id = 0
    for way in root.iter("way"):
        tags = {t.attrib["k"]: t.attrib["v"] for t in way.iter("tag")}
        if "highway" not in tags:
            continue
        if highway_classes is not None and tags["highway"] not in highway_classes:
            continue
        way_id = way.attrib.get("id", "?")
        refs = [int(nd.attrib["ref"]) for nd in way.iter("nd")]
        for ref in refs:
            if ref not in points:
                raise ParseError(f"way {way_id} references missing node {ref}")
        if not all(in_bbox(points[r]) for r in refs):
            continue
        name = tags.get("name")
        oneway = tags.get("oneway") == "yes"
        for a, b in zip(refs, refs[1:]):
            pa, pb = points[a], points[b]
            d = haversine_m(pa, pb)
            if d == 0.0:
                continue
            edges.append(Edge(next_edge_id, a, b, d, (pa, pb), name))
            next_edge_id += 1
            if not oneway:
                edges.append(Edge(next_edge_id, b, a, d, (pb, pa), name))
                next_edge_id += 1
            used_nodes.add(a)
            used_nodes.add(b)

    nodes = tuple(Node(nid, points[nid]) for nid in sorted(used_nodes))
    return RoadGraph(nodes=nodes, edges=tuple(edges))


# ---------------------------------------------------------------------------
# graph queries


def is_strongly_connected(g: RoadGraph) -> bool:
    """True iff every node reaches every other along directed edges.

    Empty and single-node graphs count as strongly connected.
    """
    if len(g.nodes) <= 1:
        return True
    return not _unreachable_pairs(g, limit=1)


def unreachable_pairs(g: RoadGraph, limit: int = 10) -> list[tuple[int, int]]:
    """Sample of (from, to) node pairs with no directed path, up to limit."""
    return _unreachable_pairs(g, limit=limit)


def _unreachable_pairs(g: RoadGraph, limit: int) -> list[tuple[int, int]]:
    if not g.nodes:
        return []
    start = g.nodes[0].id
    fwd: dict[int, list[int]] = {n.id: [] for n in g.nodes}
    rev: dict[int, list[int]] = {n.id: [] for n in g.nodes}
    for e in g.edges:
        fwd[e.src].append(e.dst)
        rev[e.dst].append(e.src)

    def reach(adj: dict[int, list[int]]) -> set[int]:
        seen = {start}
        q = deque([start])
        while q:
            u = q.popleft()
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    q.append(v)
        return seen

    pairs: list[tuple[int, int]] = []
    for nid in sorted(set(n.id for n in g.nodes) - reach(fwd)):
        pairs.append((start, nid))
        if len(pairs) >= limit:
            return pairs
    for nid in sorted(set(n.id for n in g.nodes) - reach(rev)):
        pairs.append((nid, start))
        if len(pairs) >= limit:
            return pairs
    return pairs


def total_length_m(g: RoadGraph) -> float:
    return sum(e.distance_m for e in g.edges)


# ---------------------------------------------------------------------------
# JSON hand-off (cross-module interchange format)


def graph_to_dict(g: RoadGraph) -> dict:
    # JSON uses the interchange field names "from"/"to"; the Python attributes
    # are src/dst because "from" is a keyword.
    return {
        "nodes": [
            {"id": n.id, "point": {"lat": n.point.lat, "lon": n.point.lon}} for n in g.nodes
        ],
        "edges": [
            {
                "id": e.id,
                "from": e.src,
                "to": e.dst,
                "distance_m": e.distance_m,
                "geometry": [{"lat": p.lat, "lon": p.lon} for p in e.geometry],
                "name": e.name,
            }
            for e in g.edges
        ],
    }


def graph_from_dict(doc: dict) -> RoadGraph:
    try:
        nodes = tuple(
            Node(int(n["id"]), GeoPoint(float(n["point"]["lat"]), float(n["point"]["lon"])))
            for n in doc["nodes"]
        )
        edges = tuple(
            Edge(
                int(e["id"]),
                int(e["from"]),
                int(e["to"]),
                float(e["distance_m"]),
                tuple(GeoPoint(float(p["lat"]), float(p["lon"])) for p in e["geometry"]),
                e.get("name"),
            )
            for e in doc["edges"]
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad graph JSON: {exc}") from exc
    return RoadGraph(nodes=nodes, edges=edges)


def save_graph(g: RoadGraph, path: str | Path) -> None:
    Path(path).write_text(json.dumps(graph_to_dict(g), indent=2), encoding="utf-8")


def load_graph(path: str | Path) -> RoadGraph:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"bad graph JSON: {exc}", line=exc.lineno) from exc
    return graph_from_dict(doc)

"""Coverage-route planning on a directed road graph.

Two steps: duplicate a minimum-length set of existing edges until every node
is balanced (in-degree = out-degree), then walk an Euler circuit over the
duplicated multigraph. Duplication is solved exactly as a min-cost flow
(successive shortest paths); the circuit walk is Hierholzer with a greedy
turn-penalty edge choice, so U-turns and penalized turns are avoided where
the greedy choice allows.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from functools import cached_property
from xml.sax.saxutils import quoteattr

from .errors import (
    EmptyGraph,
    InvalidCircuit,
    NodeNotFound,
    NotStronglyConnected,
    UnbalancedGraph,
)
from .netgraph import Edge, RoadGraph, bearing_deg, total_length_m, unreachable_pairs

TURN_KINDS = ("straight", "right", "left", "u_turn")


@dataclass(frozen=True)
class TurnPenaltyTable:
    """Dimensionless costs used to order edge choices at intersections."""

    straight: float = 0.0
    right: float = 1.0
    left: float = 2.0
    u_turn: float = 10.0

    def __post_init__(self):
        for kind in TURN_KINDS:
            if getattr(self, kind) < 0:
                raise ValueError(f"{kind} penalty must be non-negative")
        if not (self.u_turn >= self.left >= self.straight):
            raise ValueError("penalties must satisfy u_turn >= left >= straight")

    def cost(self, kind: str) -> float:
        return getattr(self, kind)


@dataclass(frozen=True)
class EulerizedGraph:
    """Base graph plus per-edge duplication counts that balance every node."""

    base: RoadGraph
    duplications: dict[int, int]

    def multiplicity(self, edge_id: int) -> int:
        return 1 + self.duplications.get(edge_id, 0)

    @cached_property
    def added_length_m(self) -> float:
        by_id = self.base.edge_by_id
        return sum(count * by_id[eid].distance_m for eid, count in self.duplications.items())

    @cached_property
    def overhead_ratio(self) -> float:
        total = total_length_m(self.base)
        return self.added_length_m / total if total > 0 else 0.0


@dataclass(frozen=True)
class SurveyCircuit:
    """Closed edge walk covering the eulerized multiset exactly once."""

    edges: tuple[int, ...]
    start_node: int


def classify_turn(incoming_bearing: float, outgoing_bearing: float) -> str:
    """Classify the signed heading change between two bearings.

    The change is normalized to (-180, 180]; within 30 degrees of zero is
    straight, clockwise up to 150 is right, counterclockwise the mirror is
    left, anything sharper is a U-turn.
    """
    delta = (outgoing_bearing - incoming_bearing) % 360.0
    if delta > 180.0:
        delta -= 360.0
    if abs(delta) <= 30.0:
        return "straight"
    if 30.0 < delta <= 150.0:
        return "right"
    if -150.0 <= delta < -30.0:
        return "left"
    return "u_turn"


def edge_out_bearing(e: Edge) -> float:
    return bearing_deg(e.geometry[0], e.geometry[1])


def edge_in_bearing(e: Edge) -> float:
    return bearing_deg(e.geometry[-2], e.geometry[-1])


# ---------------------------------------------------------------------------
# eulerization via min-cost flow


class _Arc:
    __slots__ = ("head", "cap", "cost", "flow", "rev")

    def __init__(self, head: int, cap: int, cost: float):
        self.head = head
        self.cap = cap
        self.cost = cost
        self.flow = 0
        self.rev: _Arc | None = None


class _MinCostFlow:
    """Successive shortest paths with Johnson potentials (non-negative costs)."""

    def __init__(self, n: int):
        self.n = n
        self.adj: list[list[_Arc]] = [[] for _ in range(n)]

    def add_arc(self, u: int, v: int, cap: int, cost: float) -> _Arc:
        fwd = _Arc(v, cap, cost)
        bwd = _Arc(u, 0, -cost)
        fwd.rev = bwd
        bwd.rev = fwd
        self.adj[u].append(fwd)
        self.adj[v].append(bwd)
        return fwd

    def solve(self, s: int, t: int, want: int) -> int:
        pot = [0.0] * self.n
        sent = 0
        while sent < want:
            dist = [math.inf] * self.n
            prev: list[tuple[int, _Arc] | None] = [None] * self.n
            dist[s] = 0.0
            heap: list[tuple[float, int]] = [(0.0, s)]
            while heap:
                d, u = heapq.heappop(heap)
                if d > dist[u]:
                    continue
                for arc in self.adj[u]:
                    if arc.cap - arc.flow <= 0:
                        continue
                    nd = d + arc.cost + pot[u] - pot[arc.head]
                    if nd < dist[arc.head]:
                        dist[arc.head] = nd
                        prev[arc.head] = (u, arc)
                        heapq.heappush(heap, (nd, arc.head))
            if not math.isfinite(dist[t]):
                break
            for v in range(self.n):
                if math.isfinite(dist[v]):
                    pot[v] += dist[v]
            push = want - sent
            v = t
            while v != s:
                u, arc = prev[v]
                push = min(push, arc.cap - arc.flow)
                v = u
            v = t
            while v != s:
                u, arc = prev[v]
                arc.flow += push
                arc.rev.flow -= push
                v = u
            sent += push
        return sent


def eulerize(g: RoadGraph) -> EulerizedGraph:
    """Balance every node by duplicating existing edges at minimum added length.

    Imbalances are shipped as flow through the original edges (arc cost =
    edge length); the integral optimum of that flow is exactly the optimal
    duplication multiset, so no solver dependency is needed.
    """
    if not g.edges:
        raise EmptyGraph("cannot eulerize a graph with no edges")
    pairs = unreachable_pairs(g)
    if pairs:
        raise NotStronglyConnected(pairs)

    balance: dict[int, int] = {n.id: 0 for n in g.nodes}
    for e in g.edges:
        balance[e.dst] += 1  # in
        balance[e.src] -= 1  # out
    supply_total = sum(b for b in balance.values() if b > 0)
    if supply_total == 0:
        return EulerizedGraph(base=g, duplications={})

    index = {n.id: i for i, n in enumerate(g.nodes)}
    n = len(g.nodes)
    source, sink = n, n + 1
    mcf = _MinCostFlow(n + 2)
    edge_arcs: list[tuple[int, _Arc]] = []
    for e in g.edges:
        arc = mcf.add_arc(index[e.src], index[e.dst], supply_total, e.distance_m)
        edge_arcs.append((e.id, arc))
    for nid, b in balance.items():
        if b > 0:
            mcf.add_arc(source, index[nid], b, 0.0)
        elif b < 0:
            mcf.add_arc(index[nid], sink, -b, 0.0)

    sent = mcf.solve(source, sink, supply_total)
    if sent != supply_total:
        # unreachable given strong connectivity, kept as a guard
        raise UnbalancedGraph("flow could not balance the graph")
    duplications = {eid: arc.flow for eid, arc in edge_arcs if arc.flow > 0}
    return EulerizedGraph(base=g, duplications=duplications)


# ---------------------------------------------------------------------------
# Euler circuit (Hierholzer with greedy turn-penalty choice)


def euler_circuit(
    eg: EulerizedGraph, start: int, penalties: TurnPenaltyTable | None = None
) -> SurveyCircuit:
    """Walk every edge instance of the eulerized graph exactly once.

    At each step the unused out-edge with the lowest turn penalty relative to
    the incoming bearing is taken (ties to the lower edge id); exhausted
    sub-walks are completed by cycle splicing, so a full circuit is always
    produced. The first step, having no incoming bearing, takes the lowest
    edge id.
    """
    g = eg.base
    if start not in g.node_by_id:
        raise NodeNotFound(start)
    penalties = penalties or TurnPenaltyTable()

    counts = {e.id: eg.multiplicity(e.id) for e in g.edges}
    in_mult: dict[int, int] = {n.id: 0 for n in g.nodes}
    out_mult: dict[int, int] = {n.id: 0 for n in g.nodes}
    for e in g.edges:
        in_mult[e.dst] += counts[e.id]
        out_mult[e.src] += counts[e.id]
    unbalanced = [nid for nid in in_mult if in_mult[nid] != out_mult[nid]]
    if unbalanced:
        raise UnbalancedGraph(f"in != out at nodes {sorted(unbalanced)[:10]}")

    total = sum(counts.values())
    if total == 0:
        return SurveyCircuit(edges=(), start_node=start)

    adj = g.out_edges  # already sorted by edge id
    remaining_at = {nid: sum(counts[e.id] for e in es) for nid, es in adj.items()}

    def pick(node: int, incoming: float | None) -> Edge:
        best: Edge | None = None
        best_key: tuple[float, int] | None = None
        for e in adj[node]:
            if counts[e.id] == 0:
                continue
            penalty = 0.0 if incoming is None else penalties.cost(classify_turn(incoming, edge_out_bearing(e)))
            key = (penalty, e.id)
            if best_key is None or key < best_key:
                best, best_key = e, key
        assert best is not None
        return best

    def walk(node: int, incoming: float | None) -> list[Edge]:
        path: list[Edge] = []
        cur, inc = node, incoming
        while remaining_at[cur] > 0:
            e = pick(cur, inc)
            counts[e.id] -= 1
            remaining_at[cur] -= 1
            path.append(e)
            cur = e.dst
            inc = edge_in_bearing(e)
        return path

    circuit = walk(start, None)
    used = len(circuit)
    while used < total:
        for i, e in enumerate(circuit):
            if remaining_at[e.dst] > 0:
                sub = walk(e.dst, edge_in_bearing(e))
                circuit[i + 1 : i + 1] = sub
                used += len(sub)
                break
        else:
            raise NotStronglyConnected(unreachable_pairs(g))

    return SurveyCircuit(edges=tuple(e.id for e in circuit), start_node=start)


def circuit_length_m(c: SurveyCircuit, g: RoadGraph) -> float:
    by_id = g.edge_by_id
    return sum(by_id[eid].distance_m for eid in c.edges)


# ---------------------------------------------------------------------------
# GPX export


def validate_circuit(c: SurveyCircuit, g: RoadGraph) -> None:
    if not c.edges:
        raise InvalidCircuit("circuit has no edges")
    by_id = g.edge_by_id
    for eid in c.edges:
        if eid not in by_id:
            raise InvalidCircuit(f"circuit references unknown edge {eid}")
    first = by_id[c.edges[0]]
    if first.src != c.start_node:
        raise InvalidCircuit(f"circuit does not start at node {c.start_node}")
    for a, b in zip(c.edges, c.edges[1:]):
        if by_id[a].dst != by_id[b].src:
            raise InvalidCircuit(f"edges {a} and {b} do not share a node")
    if by_id[c.edges[-1]].dst != c.start_node:
        raise InvalidCircuit("circuit is not closed")


def export_gpx(c: SurveyCircuit, g: RoadGraph, creator: str = "roadsurvey") -> bytes:
    """Render the circuit as a GPX 1.1 track (one trk, one trkseg).

    Edge geometries are concatenated in traversal order with consecutive
    duplicate points removed.
    """
    validate_circuit(c, g)
    by_id = g.edge_by_id
    points = []
    for eid in c.edges:
        for p in by_id[eid].geometry:
            if points and points[-1] == p:
                continue
            points.append(p)
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<gpx version="1.1" creator={quoteattr(creator)} '
        'xmlns="http://www.topografix.com/GPX/1/1">',
        "  <trk>",
        "    <trkseg>",
    ]
    for p in points:
        lines.append(f'      <trkpt lat="{p.lat!r}" lon="{p.lon!r}"></trkpt>')
    lines += ["    </trkseg>", "  </trk>", "</gpx>", ""]
    return "\n".join(lines).encode("utf-8")

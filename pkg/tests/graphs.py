"""Hand-built graph fixtures shared by the tests.

Coordinates are chosen so the turn classifications at choice points are
unambiguous (bearings verified by hand against the classifier thresholds).
"""

from __future__ import annotations

from roadsurvey.netgraph import Edge, GeoPoint, Node, RoadGraph, haversine_m


def _edge(eid: int, src: Node, dst: Node, *vias: GeoPoint) -> Edge:
    geometry = (src.point, *vias, dst.point)
    d = sum(haversine_m(a, b) for a, b in zip(geometry, geometry[1:]))
    return Edge(eid, src.id, dst.id, d, geometry)


def cycle3() -> RoadGraph:
    """Directed triangle 0 -> 1 -> 2 -> 0."""
    a = Node(0, GeoPoint(35.0000, 135.0000))
    b = Node(1, GeoPoint(35.0000, 135.0010))
    c = Node(2, GeoPoint(35.0008, 135.0005))
    return RoadGraph(
        nodes=(a, b, c),
        edges=(_edge(0, a, b), _edge(1, b, c), _edge(2, c, a)),
    )


def figure_eight() -> RoadGraph:
    """Two directed triangles sharing node 0; four-plus-two edges, Eulerian."""
    s = Node(0, GeoPoint(0.0, 0.0010))
    a = Node(1, GeoPoint(0.0, 0.0000))
    b = Node(2, GeoPoint(0.0002, 0.0002))
    c = Node(3, GeoPoint(0.0, 0.0020))
    d = Node(4, GeoPoint(0.0002, 0.0018))
    return RoadGraph(
        nodes=(s, a, b, c, d),
        edges=(
            _edge(0, s, a),
            _edge(1, a, b),
            _edge(2, b, s),
            _edge(3, s, c),
            _edge(4, c, d),
            _edge(5, d, s),
        ),
    )


def three_loops() -> RoadGraph:
    """Three directed triangles sharing node 0.

    Arriving at node 0 from loop one (bearing ~104 deg), the opener of loop
    three (edge 3, bearing ~264 deg) is a U-turn while the opener of loop two
    (edge 6, bearing 90 deg) is straight; an id-greedy walker would U-turn
    into edge 3, a penalty-aware one must not.
    """
    s = Node(0, GeoPoint(0.0, 0.0010))
    a = Node(1, GeoPoint(0.0, 0.0000))
    b = Node(2, GeoPoint(0.0002, 0.0002))
    e = Node(3, GeoPoint(-0.0001, 0.0001))
    f = Node(4, GeoPoint(-0.0002, 0.0003))
    c = Node(5, GeoPoint(0.0, 0.0020))
    d = Node(6, GeoPoint(0.0002, 0.0018))
    return RoadGraph(
        nodes=(s, a, b, e, f, c, d),
        edges=(
            _edge(0, s, a),
            _edge(1, a, b),
            _edge(2, b, s),
            _edge(3, s, e),
            _edge(4, e, f),
            _edge(5, f, s),
            _edge(6, s, c),
            _edge(7, c, d),
            _edge(8, d, s),
        ),
    )


def straight_vs_left() -> RoadGraph:
    """Arriving eastbound at node 1, edge 1 turns left north and edge 2
    continues straight east; the left option has the lower id, so only the
    penalty can make the walker go straight first. A single walk covers
    everything (no splicing), keeping the choice order observable."""
    a = Node(0, GeoPoint(0.0, 0.0000))
    b = Node(1, GeoPoint(0.0, 0.0010))
    c = Node(2, GeoPoint(0.0, 0.0020))
    d = Node(3, GeoPoint(0.0010, 0.0010))
    return RoadGraph(
        nodes=(a, b, c, d),
        edges=(
            _edge(0, a, b),  # east
            _edge(1, b, d),  # left turn north
            _edge(2, b, c),  # straight continuation east
            _edge(3, c, b),  # back west
            _edge(4, d, a),  # southwest, closes the circuit
        ),
    )


def two_node_parallel() -> RoadGraph:
    """A->B twice (100 m each), B->A once (150 m); optimal fix duplicates B->A."""
    a = Node(0, GeoPoint(35.0, 135.0))
    b = Node(1, GeoPoint(35.0, 135.0010988))  # ~100 m east at this latitude
    fwd1 = Edge(0, a.id, b.id, 100.0, (a.point, b.point))
    fwd2 = Edge(1, a.id, b.id, 100.0, (a.point, b.point))
    back = Edge(2, b.id, a.id, 150.0, (b.point, a.point))
    return RoadGraph(nodes=(a, b), edges=(fwd1, fwd2, back))

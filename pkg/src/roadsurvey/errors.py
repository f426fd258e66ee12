"""Exception types shared across the toolkit."""

from __future__ import annotations


class RoadSurveyError(Exception):
    """Base class for all domain errors raised by this package."""


class ParseError(RoadSurveyError):
    """Malformed input document (OSM XML, CSV, graph JSON)."""

    def __init__(self, message: str, *, line: int | None = None):
        super().__init__(message)
        self.line = line


class SchemaError(RoadSurveyError):
    """A JSON Lines record violates its schema."""

    def __init__(self, message: str, *, line: int | None = None):
        super().__init__(message)
        self.line = line


class EmptyGraph(RoadSurveyError):
    """Operation requires a graph with at least one edge."""


class NotStronglyConnected(RoadSurveyError):
    """Graph is not strongly connected; carries sample unreachable pairs."""

    def __init__(self, unreachable_pairs: list[tuple[int, int]]):
        shown = ", ".join(f"{a}->{b}" for a, b in unreachable_pairs[:10])
        more = "" if len(unreachable_pairs) <= 10 else f" (+{len(unreachable_pairs) - 10} more)"
        super().__init__(f"graph is not strongly connected; unreachable: {shown}{more}")
        self.unreachable_pairs = unreachable_pairs


class NodeNotFound(RoadSurveyError):
    def __init__(self, node_id: int):
        super().__init__(f"node {node_id} not in graph")
        self.node_id = node_id


class UnbalancedGraph(RoadSurveyError):
    """In-degree does not equal out-degree at some node (internal invariant)."""


class InvalidCircuit(RoadSurveyError):
    """Circuit fails adjacency, closure, or edge-existence checks."""


class OutOfTrackSpan(RoadSurveyError):
    """Timestamp falls outside the GPS track span beyond the clamp tolerance."""

    def __init__(self, t: float, span: tuple[float, float], tolerance_s: float):
        super().__init__(
            f"t={t} outside track span [{span[0]}, {span[1]}] by more than {tolerance_s} s"
        )
        self.t = t
        self.span = span
        self.tolerance_s = tolerance_s


class NonPositiveTime(RoadSurveyError):
    """Maintenance or traversal time must be strictly positive."""


class ExactLimitExceeded(RoadSurveyError):
    """Instance too large for the exact solver; use the heuristic."""

    def __init__(self, n_edges: int, limit: int):
        super().__init__(
            f"exact solver limited to {limit} base edges, instance has {n_edges};"
            " use the heuristic solver"
        )
        self.n_edges = n_edges
        self.limit = limit

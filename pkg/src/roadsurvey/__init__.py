"""Road-network survey toolkit.

Plan a minimal-length drive covering every road of a target network, align
geo-tagged survey images with the GPS track, turn pavement-damage detector
output into per-edge severity maps and reviewable damage records, and
optimize maintenance plans under a time budget.
"""

from .netgraph import (
    EARTH_RADIUS_M,
    Edge,
    GeoPoint,
    Node,
    RoadGraph,
    bearing_deg,
    haversine_m,
    is_strongly_connected,
    parse_osm,
    total_length_m,
)
from .routeplan import (
    EulerizedGraph,
    SurveyCircuit,
    TurnPenaltyTable,
    classify_turn,
    euler_circuit,
    eulerize,
    export_gpx,
)
from .geoalign import (
    AlignConfig,
    AlignResult,
    GpsFix,
    GpsTrack,
    ImageRecord,
    align,
    interpolate_position,
    project_to_edge,
    smooth_track,
    subsample_images,
)
from .damagemap import (
    Detection,
    EdgeSeverity,
    Verdict,
    edge_cost,
    edge_severity,
    effective_detections,
    ingest_detections,
)
from .maintplan import (
    AugmentedGraph,
    Budget,
    MaintenancePlan,
    PlanStep,
    augment,
    solve_exact,
    solve_heuristic,
)

__version__ = "0.1.0"

__all__ = [
    "EARTH_RADIUS_M",
    "GeoPoint",
    "Node",
    "Edge",
    "RoadGraph",
    "parse_osm",
    "haversine_m",
    "bearing_deg",
    "is_strongly_connected",
    "total_length_m",
    "TurnPenaltyTable",
    "EulerizedGraph",
    "SurveyCircuit",
    "classify_turn",
    "eulerize",
    "euler_circuit",
    "export_gpx",
    "GpsFix",
    "GpsTrack",
    "ImageRecord",
    "AlignConfig",
    "AlignResult",
    "smooth_track",
    "interpolate_position",
    "subsample_images",
    "project_to_edge",
    "align",
    "Detection",
    "Verdict",
    "EdgeSeverity",
    "ingest_detections",
    "effective_detections",
    "edge_severity",
    "edge_cost",
    "AugmentedGraph",
    "Budget",
    "PlanStep",
    "MaintenancePlan",
    "augment",
    "solve_exact",
    "solve_heuristic",
    "__version__",
]

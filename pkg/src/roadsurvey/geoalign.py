"""Align timestamped images with a GPS track.

Pipeline: Gaussian-smooth the track over time, linearly interpolate each
image's capture time against it, keep only one image per along-track
distance interval, and snap each kept image to the nearest road edge under
a local planar approximation. Smoothed coordinates are used throughout,
including for the edge assignment (configurable by smoothing with sigma 0).
"""

from __future__ import annotations

import bisect
import csv
import io
import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import EmptyGraph, OutOfTrackSpan, ParseError
from .netgraph import GeoPoint, RoadGraph, haversine_m, local_xy


@dataclass(frozen=True)
class GpsFix:
    t: float
    point: GeoPoint

    def __post_init__(self):
        if not math.isfinite(self.t):
            raise ValueError(f"non-finite timestamp {self.t}")


@dataclass(frozen=True)
class GpsTrack:
    fixes: tuple[GpsFix, ...]

    def __post_init__(self):
        ts = [f.t for f in self.fixes]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("track timestamps must be strictly increasing")

    @property
    def span(self) -> tuple[float, float]:
        return (self.fixes[0].t, self.fixes[-1].t)


@dataclass(frozen=True)
class ImageRecord:
    image_id: str
    t: float
    point: GeoPoint | None = None
    edge_id: int | None = None
    dist_to_edge_m: float | None = None


@dataclass(frozen=True)
class AlignConfig:
    sigma_s: float = 2.0
    min_spacing_m: float = 10.0
    max_dist_m: float = 25.0
    clamp_tol_s: float = 1.0


@dataclass(frozen=True)
class AlignResult:
    records: tuple[ImageRecord, ...]
    dropped_out_of_span: int
    dropped_unassigned: int


def smooth_track(track: GpsTrack, sigma_s: float) -> GpsTrack:
    """Gaussian-smooth lat/lon over time; timestamps are untouched.

    Each fix becomes the weighted mean of fixes within 3 sigma of it in time,
    weights exp(-(dt)^2 / (2 sigma^2)) renormalized over the window. Sigma 0
    is the identity.
    """
    if sigma_s < 0:
        raise ValueError("sigma_s must be >= 0")
    if sigma_s == 0 or len(track.fixes) < 2:
        return track
    ts = np.array([f.t for f in track.fixes])
    lats = np.array([f.point.lat for f in track.fixes])
    lons = np.array([f.point.lon for f in track.fixes])
    out = []
    for i, f in enumerate(track.fixes):
        lo = np.searchsorted(ts, ts[i] - 3.0 * sigma_s, side="left")
        hi = np.searchsorted(ts, ts[i] + 3.0 * sigma_s, side="right")
        w = np.exp(-((ts[lo:hi] - ts[i]) ** 2) / (2.0 * sigma_s**2))
        w /= w.sum()
        out.append(GpsFix(f.t, GeoPoint(float(w @ lats[lo:hi]), float(w @ lons[lo:hi]))))
    return GpsTrack(tuple(out))


def interpolate_position(track: GpsTrack, t: float, clamp_tol_s: float = 1.0) -> GeoPoint:
    """Linearly interpolate lat and lon at time t along the track.

    Times equal to a fix return that fix's point exactly; times outside the
    span by at most clamp_tol_s clamp to the nearest endpoint; anything
    further raises OutOfTrackSpan.
    """
    if not track.fixes:
        raise ValueError("empty track")
    ts = [f.t for f in track.fixes]
    t0, t1 = ts[0], ts[-1]
    if t < t0 or t > t1:
        if t0 - clamp_tol_s <= t < t0:
            return track.fixes[0].point
        if t1 < t <= t1 + clamp_tol_s:
            return track.fixes[-1].point
        raise OutOfTrackSpan(t, (t0, t1), clamp_tol_s)
    i = bisect.bisect_left(ts, t)
    if ts[i] == t:
        return track.fixes[i].point
    a, b = track.fixes[i - 1], track.fixes[i]
    frac = (t - a.t) / (b.t - a.t)
    return GeoPoint(
        a.point.lat + frac * (b.point.lat - a.point.lat),
        a.point.lon + frac * (b.point.lon - a.point.lon),
    )


def subsample_images(
    images: list[ImageRecord] | tuple[ImageRecord, ...], min_spacing_m: float = 10.0
) -> list[ImageRecord]:
    """Keep one image per min_spacing_m of cumulative along-track distance.

    Greedy scan over the time-ordered records: the first image is kept, and a
    later one is kept when the summed point-to-point distance since the last
    kept image reaches the threshold. Stationary stretches therefore collapse
    to a single image.
    """
    if any(img.point is None for img in images):
        raise ValueError("all images must carry a point before subsampling")
    kept: list[ImageRecord] = []
    acc = 0.0
    prev: ImageRecord | None = None
    for img in images:
        if prev is None:
            kept.append(img)
        else:
            acc += haversine_m(prev.point, img.point)
            if acc >= min_spacing_m:
                kept.append(img)
                acc = 0.0
        prev = img
    return kept


def project_to_edge(
    p: GeoPoint, g: RoadGraph, max_dist_m: float = 25.0
) -> tuple[int, float] | None:
    """Snap a point to the nearest edge within max_dist_m, or None.

    All geometry is projected to an equirectangular plane centered on the
    query point's latitude, then the minimum clamped point-to-segment
    distance over every geometry segment of every edge is taken. Ties go to
    the lower edge id.
    """
    if not g.edges:
        raise EmptyGraph("graph has no edges to project onto")
    px, py = local_xy(p, p.lat)
    best_edge: int | None = None
    best_dist = math.inf
    for e in sorted(g.edges, key=lambda e: e.id):
        xy = np.array([local_xy(q, p.lat) for q in e.geometry])
        ax, ay = xy[:-1, 0], xy[:-1, 1]
        bx, by = xy[1:, 0], xy[1:, 1]
        dx, dy = bx - ax, by - ay
        seg_len2 = dx * dx + dy * dy
        t = np.where(seg_len2 > 0, ((px - ax) * dx + (py - ay) * dy) / np.where(seg_len2 > 0, seg_len2, 1.0), 0.0)
        t = np.clip(t, 0.0, 1.0)
        fx, fy = ax + t * dx, ay + t * dy
        d = float(np.min(np.hypot(px - fx, py - fy)))
        if d < best_dist:
            best_dist = d
            best_edge = e.id
    if best_dist > max_dist_m:
        return None
    return best_edge, best_dist


def align(
    track: GpsTrack,
    images: list[ImageRecord] | tuple[ImageRecord, ...],
    g: RoadGraph,
    cfg: AlignConfig = AlignConfig(),
) -> AlignResult:
    """Smooth, interpolate, subsample, and project in one pass.

    Returns only fully annotated records (point, edge_id, dist_to_edge_m set)
    plus counts of images dropped for being outside the track span or too far
    from any edge.
    """
    smoothed = smooth_track(track, cfg.sigma_s)
    located: list[ImageRecord] = []
    dropped_span = 0
    for img in images:
        try:
            point = interpolate_position(smoothed, img.t, cfg.clamp_tol_s)
        except OutOfTrackSpan:
            dropped_span += 1
            continue
        located.append(replace(img, point=point))
    kept = subsample_images(located, cfg.min_spacing_m)
    out: list[ImageRecord] = []
    dropped_unassigned = 0
    for img in kept:
        hit = project_to_edge(img.point, g, cfg.max_dist_m)
        if hit is None:
            dropped_unassigned += 1
            continue
        edge_id, dist = hit
        out.append(replace(img, edge_id=edge_id, dist_to_edge_m=dist))
    return AlignResult(tuple(out), dropped_span, dropped_unassigned)


# ---------------------------------------------------------------------------
# file formats: GPS CSV, image-index CSV, aligned-records JSONL


def read_gps_csv(source: str | Path | io.TextIOBase) -> GpsTrack:
    """Read a `t,lat,lon` CSV (header required) into a GpsTrack."""
    rows = _read_csv(source, ("t", "lat", "lon"))
    fixes = tuple(
        GpsFix(float(r["t"]), GeoPoint(float(r["lat"]), float(r["lon"]))) for r in rows
    )
    return GpsTrack(fixes)


def read_image_index_csv(source: str | Path | io.TextIOBase) -> list[ImageRecord]:
    """Read an `image_id,t` CSV (header required), ordered by timestamp."""
    rows = _read_csv(source, ("image_id", "t"))
    records = [ImageRecord(r["image_id"], float(r["t"])) for r in rows]
    return sorted(records, key=lambda r: r.t)


def _read_csv(source, expected_header: tuple[str, ...]) -> list[dict]:
    if isinstance(source, (str, Path)):
        with open(source, newline="", encoding="utf-8") as fh:
            return _read_csv(fh, expected_header)
    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError(f"empty CSV, expected header {','.join(expected_header)}", line=1)
    if tuple(h.strip() for h in header) != expected_header:
        raise ParseError(
            f"bad CSV header {header!r}, expected {','.join(expected_header)}", line=1
        )
    rows = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(expected_header):
            raise ParseError(f"CSV line {lineno}: expected {len(expected_header)} fields", line=lineno)
        rows.append(dict(zip(expected_header, row)))
    return rows


def write_aligned_jsonl(records, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(
                json.dumps(
                    {
                        "image_id": r.image_id,
                        "t": r.t,
                        "lat": r.point.lat,
                        "lon": r.point.lon,
                        "edge_id": r.edge_id,
                        "dist_to_edge_m": r.dist_to_edge_m,
                    },
                    sort_keys=True,
                )
                + "\n"
            )


def read_aligned_jsonl(path: str | Path) -> list[ImageRecord]:
    text = Path(path).read_text(encoding="utf-8")
    records = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            records.append(
                ImageRecord(
                    image_id=str(obj["image_id"]),
                    t=float(obj["t"]),
                    point=GeoPoint(float(obj["lat"]), float(obj["lon"])),
                    edge_id=int(obj["edge_id"]),
                    dist_to_edge_m=float(obj["dist_to_edge_m"]),
                )
            )
        except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
            raise ParseError(f"aligned records line {lineno}: {exc}", line=lineno) from exc
    return records

"""Road network: GeoJSON LineString loading, bounding-box tree index,
nearest-point-on-road queries, and the snap pass that relocates durians
stranded in unreachable spots onto the nearest road."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from heapq import heappop, heappush

from .geo import GeoPoint, LocalFrame, haversine_distance, to_local, from_local
from .spawner import DurianSet, DurianState

DEFAULT_REACH_EPSILON_M = 50.0

_LEAF_SIZE = 8


class ParseError(ValueError):
    pass


class EmptyNetwork(Exception):
    pass


@dataclass(frozen=True)
class RoadSegment:
    id: int
    polyline: tuple[GeoPoint, ...]
    name: str | None = None

    def __post_init__(self):
        if len(self.polyline) < 2:
            raise ValueError("polyline needs at least 2 vertices")
        for a, b in zip(self.polyline, self.polyline[1:]):
            if a == b:
                raise ValueError("consecutive polyline vertices must be distinct")


@dataclass(frozen=True)
class SnapResult:
    point: GeoPoint
    segment_id: int
    distance_from_query: float


# bbox = (min_lon, min_lat, max_lon, max_lat)
def _segment_bbox(seg: RoadSegment) -> tuple[float, float, float, float]:
    lons = [p.lon for p in seg.polyline]
    lats = [p.lat for p in seg.polyline]
    return (min(lons), min(lats), max(lons), max(lats))


def _bbox_union(a, b):
    return (min(a[0], b[0]), min(a[1], b[1]), max(a[2], b[2]), max(a[3], b[3]))


def _bbox_intersects(a, b) -> bool:
    return a[0] <= b[2] and b[0] <= a[2] and a[1] <= b[3] and b[1] <= a[3]


class _BBoxNode:
    __slots__ = ("bbox", "children", "segment_ids")

    def __init__(self, bbox, children=None, segment_ids=None):
        self.bbox = bbox
        self.children = children
        self.segment_ids = segment_ids


def _build_tree(entries: list[tuple[tuple, int]]) -> _BBoxNode:
    """STR-style bulk load: sort by center lon, slice, sort slices by lat."""
    if len(entries) <= _LEAF_SIZE:
        bbox = entries[0][0]
        for b, _ in entries[1:]:
            bbox = _bbox_union(bbox, b)
        return _BBoxNode(bbox, segment_ids=[i for _, i in entries])

    n_leaves = math.ceil(len(entries) / _LEAF_SIZE)
    n_slices = math.ceil(math.sqrt(n_leaves))
    entries = sorted(entries, key=lambda e: e[0][0] + e[0][2])
    slice_size = math.ceil(len(entries) / n_slices)
    children: list[_BBoxNode] = []
    for s in range(0, len(entries), slice_size):
        sl = sorted(entries[s : s + slice_size], key=lambda e: e[0][1] + e[0][3])
        for k in range(0, len(sl), _LEAF_SIZE):
            chunk = sl[k : k + _LEAF_SIZE]
            bbox = chunk[0][0]
            for b, _ in chunk[1:]:
                bbox = _bbox_union(bbox, b)
            children.append(_BBoxNode(bbox, segment_ids=[i for _, i in chunk]))
    # collapse child layers until one root remains
    while len(children) > 1:
        parents = []
        for k in range(0, len(children), _LEAF_SIZE):
            group = children[k : k + _LEAF_SIZE]
            bbox = group[0].bbox
            for c in group[1:]:
                bbox = _bbox_union(bbox, c.bbox)
            parents.append(_BBoxNode(bbox, children=group))
        children = parents
    return children[0]


class RoadNetwork:
    """Immutable after construction; all queries are read-only."""

    def __init__(self, segments: list[RoadSegment], reach_epsilon: float = DEFAULT_REACH_EPSILON_M):
        if not segments:
            raise EmptyNetwork("road network has no segments")
        self.segments = list(segments)
        self.reach_epsilon = reach_epsilon
        self._by_id = {s.id: s for s in self.segments}
        self._root = _build_tree([(_segment_bbox(s), s.id) for s in self.segments])

    def query_box(self, bbox: tuple[float, float, float, float]) -> list[int]:
        """Ids of all segments whose bbox intersects the query box (superset
        of the segments actually intersecting it)."""
        out: list[int] = []
        stack = [self._root]
        while stack:
            node = stack.pop()
            if not _bbox_intersects(node.bbox, bbox):
                continue
            if node.segment_ids is not None:
                out.extend(node.segment_ids)
            else:
                stack.extend(node.children)
        return out

    def segment(self, segment_id: int) -> RoadSegment:
        return self._by_id[segment_id]


def load_roads(source, reach_epsilon: float = DEFAULT_REACH_EPSILON_M) -> RoadNetwork:
    """Build a RoadNetwork from a GeoJSON FeatureCollection of LineStrings.

    ``source`` may be a path, an open file, or an already-parsed dict.
    Coordinates are [lon, lat] per GeoJSON convention.
    """
    if isinstance(source, dict):
        doc = source
    elif hasattr(source, "read"):
        try:
            doc = json.load(source)
        except json.JSONDecodeError as e:
            raise ParseError(f"invalid JSON: {e}") from e
    else:
        with open(source, "r", encoding="utf-8") as f:
            try:
                doc = json.load(f)
            except json.JSONDecodeError as e:
                raise ParseError(f"invalid JSON in {source}: {e}") from e

    features = doc.get("features")
    if not isinstance(features, list):
        raise ParseError("expected a FeatureCollection with a 'features' list")

    segments: list[RoadSegment] = []
    for idx, feat in enumerate(features):
        geom = feat.get("geometry") or {}
        if geom.get("type") != "LineString":
            continue
        coords = geom.get("coordinates")
        if not isinstance(coords, list) or len(coords) < 2:
            raise ParseError(f"feature {idx}: LineString needs >= 2 coordinates")
        try:
            points = tuple(GeoPoint(lat=c[1], lon=c[0]) for c in coords)
        except (TypeError, IndexError, ValueError) as e:
            raise ParseError(f"feature {idx}: malformed coordinate array: {e}") from e
        name = (feat.get("properties") or {}).get("name")
        try:
            segments.append(RoadSegment(id=len(segments) + 1, polyline=points, name=name))
        except ValueError as e:
            raise ParseError(f"feature {idx}: {e}") from e
    if not segments:
        raise EmptyNetwork("no LineString features in road data")
    return RoadNetwork(segments, reach_epsilon=reach_epsilon)


def _project_to_polyline_local(
    frame: LocalFrame, polyline: tuple[GeoPoint, ...]
) -> tuple[float, tuple[float, float]]:
    """Min squared planar distance from the frame origin to the polyline, and
    the closest planar point. Interior-of-segment projections allowed."""
    best_d2 = math.inf
    best_xy = (0.0, 0.0)
    prev = to_local(frame, polyline[0])
    for vertex in polyline[1:]:
        cur = to_local(frame, vertex)
        ax, ay = prev
        bx, by = cur
        dx, dy = bx - ax, by - ay
        seg_len2 = dx * dx + dy * dy
        # query point is the frame origin (0, 0)
        t = 0.0 if seg_len2 == 0.0 else max(0.0, min(1.0, -(ax * dx + ay * dy) / seg_len2))
        px, py = ax + t * dx, ay + t * dy
        d2 = px * px + py * py
        if d2 < best_d2:
            best_d2 = d2
            best_xy = (px, py)
        prev = cur
    return best_d2, best_xy


def nearest_on_roads(net: RoadNetwork, p: GeoPoint) -> SnapResult:
    """Globally nearest point on any road segment, best-first over the bbox
    tree. Ties (within 1e-9 m) break to the lowest segment id."""
    if not net.segments:
        raise EmptyNetwork("road network has no segments")
    frame = LocalFrame.at(p)

    def bbox_min_dist(bbox) -> float:
        # planar lower bound from p to the box, in meters
        dlon = max(bbox[0] - p.lon, 0.0, p.lon - bbox[2])
        dlat = max(bbox[1] - p.lat, 0.0, p.lat - bbox[3])
        dx = dlon * frame.meters_per_deg_lon
        dy = dlat * frame.meters_per_deg_lat
        return math.hypot(dx, dy)

    best_d = math.inf
    best_id = -1
    best_xy = (0.0, 0.0)
    heap: list[tuple[float, int, _BBoxNode]] = [(bbox_min_dist(net._root.bbox), 0, net._root)]
    tiebreak = 1
    while heap:
        lower, _, node = heappop(heap)
        if lower > best_d + 1e-9:
            break
        if node.segment_ids is not None:
            for sid in node.segment_ids:
                seg = net.segment(sid)
                d2, xy = _project_to_polyline_local(frame, seg.polyline)
                d = math.sqrt(d2)
                if d < best_d - 1e-9 or (d < best_d + 1e-9 and sid < best_id):
                    best_d, best_id, best_xy = d, sid, xy
        else:
            for child in node.children:
                heappush(heap, (bbox_min_dist(child.bbox), tiebreak, child))
                tiebreak += 1

    point = from_local(frame, best_xy)
    return SnapResult(
        point=point,
        segment_id=best_id,
        distance_from_query=haversine_distance(p, point),
    )


def durians_to_roads(net: RoadNetwork, durian_set: DurianSet) -> DurianSet:
    """Move every Active durian farther than reach_epsilon from all roads onto
    its nearest road point. Captured/Failed durians and reachable durians are
    never touched; idempotent by construction."""
    durians = []
    for d in durian_set.durians:
        if d.state is not DurianState.ACTIVE:
            durians.append(d)
            continue
        snap = nearest_on_roads(net, d.position)
        if snap.distance_from_query > net.reach_epsilon:
            durians.append(replace(d, position=snap.point, snapped=True))
        else:
            durians.append(d)
    return replace(durian_set, durians=tuple(durians))

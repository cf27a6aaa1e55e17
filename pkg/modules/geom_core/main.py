"""
Geometry Core Module
Exact 2-D predicates and primitives shared by the grid, obstacle and clustering modules
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import ArrayLike
from typing_extensions import Final

from ..core.errors import (
    DegeneratePolygon,
    EndpointInsideObstacle,
    InvalidParameter,
    OverlappingObstacles,
    SelfIntersectingPolygon,
    TooFewVertices,
)

EPS: Final = 1e-9


@dataclass(frozen=True)
class Point:
    """A finite point in scene units"""
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise InvalidParameter(f"Point coordinates must be finite: ({self.x}, {self.y})")

    def as_tuple(self) -> Tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class Segment:
    a: Point
    b: Point

    @property
    def length(self) -> float:
        return distance(self.a, self.b)

    def point_at(self, t: float) -> Point:
        return Point(self.a.x + t * (self.b.x - self.a.x), self.a.y + t * (self.b.y - self.a.y))


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle, closed on every side"""
    min: Point
    max: Point

    def __post_init__(self):
        if not (self.min.x < self.max.x and self.min.y < self.max.y):
            raise InvalidParameter(f"Empty rectangle: {self.min} .. {self.max}")

    @classmethod
    def from_bounds(cls, min_x: float, min_y: float, max_x: float, max_y: float) -> "Rect":
        return cls(Point(min_x, min_y), Point(max_x, max_y))

    @property
    def width(self) -> float:
        return self.max.x - self.min.x

    @property
    def height(self) -> float:
        return self.max.y - self.min.y

    @property
    def center(self) -> Point:
        return Point((self.min.x + self.max.x) / 2.0, (self.min.y + self.max.y) / 2.0)

    def contains(self, p: Point) -> bool:
        return self.min.x <= p.x <= self.max.x and self.min.y <= p.y <= self.max.y

    def corners(self) -> Tuple[Point, Point, Point, Point]:
        return (
            self.min,
            Point(self.max.x, self.min.y),
            self.max,
            Point(self.min.x, self.max.y),
        )

    def edges(self) -> List[Segment]:
        c = self.corners()
        return [Segment(c[i], c[(i + 1) % 4]) for i in range(4)]

    def touches(self, other: "Rect", tol: float = EPS) -> bool:
        """True when the closed rectangles share at least one point"""
        return (
            self.min.x <= other.max.x + tol and other.min.x <= self.max.x + tol
            and self.min.y <= other.max.y + tol and other.min.y <= self.max.y + tol
        )

    def contact_point(self, other: "Rect") -> Optional[Point]:
        """Midpoint of the shared region of two touching rectangles"""
        if not self.touches(other):
            return None
        lo_x, hi_x = max(self.min.x, other.min.x), min(self.max.x, other.max.x)
        lo_y, hi_y = max(self.min.y, other.min.y), min(self.max.y, other.max.y)
        return Point((lo_x + hi_x) / 2.0, (lo_y + hi_y) / 2.0)


class IntersectKind(Enum):
    NONE = "none"
    PROPER = "proper"
    TOUCHING = "touching"


class Location(Enum):
    INSIDE = "inside"
    OUTSIDE = "outside"
    BOUNDARY = "boundary"


def distance(p: Point, q: Point) -> float:
    return math.hypot(q.x - p.x, q.y - p.y)


def orientation(a: Point, b: Point, c: Point) -> float:
    """Twice the signed area of (a, b, c): > 0 counter-clockwise, < 0 clockwise, 0 collinear"""
    return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)


def _sign(v: float) -> int:
    return int(v > 0) - int(v < 0)


def _within_box(a: Point, b: Point, p: Point) -> bool:
    return (
        min(a.x, b.x) <= p.x <= max(a.x, b.x)
        and min(a.y, b.y) <= p.y <= max(a.y, b.y)
    )


def segments_intersect(s1: Segment, s2: Segment) -> IntersectKind:
    """Classify how two closed segments meet.

    PROPER when the interiors cross at a single point, TOUCHING when they meet
    only at an endpoint of either segment or overlap collinearly.
    """
    a, b, c, d = s1.a, s1.b, s2.a, s2.b
    o1 = _sign(orientation(a, b, c))
    o2 = _sign(orientation(a, b, d))
    o3 = _sign(orientation(c, d, a))
    o4 = _sign(orientation(c, d, b))

    if o1 * o2 < 0 and o3 * o4 < 0:
        return IntersectKind.PROPER

    if (
        (o1 == 0 and _within_box(a, b, c))
        or (o2 == 0 and _within_box(a, b, d))
        or (o3 == 0 and _within_box(c, d, a))
        or (o4 == 0 and _within_box(c, d, b))
    ):
        return IntersectKind.TOUCHING
    return IntersectKind.NONE


def point_segment_distance(p: Point, s: Segment) -> float:
    dx, dy = s.b.x - s.a.x, s.b.y - s.a.y
    length_sq = dx * dx + dy * dy
    if length_sq == 0.0:
        return distance(p, s.a)
    t = ((p.x - s.a.x) * dx + (p.y - s.a.y) * dy) / length_sq
    t = min(1.0, max(0.0, t))
    return math.hypot(p.x - (s.a.x + t * dx), p.y - (s.a.y + t * dy))


def signed_area(vertices: Sequence[Point]) -> float:
    total = 0.0
    n = len(vertices)
    for i in range(n):
        p, q = vertices[i], vertices[(i + 1) % n]
        total += p.x * q.y - q.x * p.y
    return total / 2.0


@dataclass(frozen=True)
class Polygon:
    """Simple polygon with at least three vertices, stored counter-clockwise.

    Construction validates and normalises; degenerate input is rejected.
    """
    vertices: Tuple[Point, ...]
    bbox: Rect = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        verts = list(self.vertices)
        if len(verts) > 1 and verts[0] == verts[-1]:
            verts.pop()
        if len(set(verts)) < 3:
            raise TooFewVertices(f"A polygon needs at least 3 distinct vertices, got {len(set(verts))}")
        for i in range(len(verts)):
            if verts[i] == verts[(i + 1) % len(verts)]:
                raise DegeneratePolygon(f"Repeated consecutive vertex {verts[i]}")

        xs = [v.x for v in verts]
        ys = [v.y for v in verts]
        scale = max(max(xs) - min(xs), max(ys) - min(ys))
        area = signed_area(verts)
        if abs(area) <= EPS * max(scale, 1.0) ** 2:
            raise DegeneratePolygon("Polygon has zero area (collinear vertices)")
        if area < 0:
            verts.reverse()

        _check_simple(verts)
        object.__setattr__(self, "vertices", tuple(verts))
        if min(xs) < max(xs) and min(ys) < max(ys):
            object.__setattr__(self, "bbox", Rect.from_bounds(min(xs), min(ys), max(xs), max(ys)))

    @classmethod
    def from_coords(cls, coords: Iterable[Sequence[float]]) -> "Polygon":
        return cls(tuple(Point(float(c[0]), float(c[1])) for c in coords))

    @property
    def area(self) -> float:
        return signed_area(self.vertices)

    def edges(self) -> List[Segment]:
        n = len(self.vertices)
        return [Segment(self.vertices[i], self.vertices[(i + 1) % n]) for i in range(n)]


def _check_simple(verts: List[Point]) -> None:
    n = len(verts)
    edges = [Segment(verts[i], verts[(i + 1) % n]) for i in range(n)]
    for i in range(n):
        # consecutive edges may only share their common vertex
        nxt = edges[(i + 1) % n]
        if orientation(edges[i].a, edges[i].b, nxt.b) == 0 and (
            _within_box(edges[i].a, edges[i].b, nxt.b) or _within_box(nxt.a, nxt.b, edges[i].a)
        ):
            raise SelfIntersectingPolygon(f"Edges {i} and {(i + 1) % n} fold back on each other")
        for j in range(i + 2, n):
            if i == 0 and j == n - 1:
                continue
            if segments_intersect(edges[i], edges[j]) is not IntersectKind.NONE:
                raise SelfIntersectingPolygon(f"Edges {i} and {j} intersect")


def point_in_polygon(p: Point, poly: Polygon) -> Location:
    """Ray Crossings classification; points within EPS of an edge are BOUNDARY"""
    bbox = poly.bbox
    if not (bbox.min.x - EPS <= p.x <= bbox.max.x + EPS and bbox.min.y - EPS <= p.y <= bbox.max.y + EPS):
        return Location.OUTSIDE

    verts = poly.vertices
    n = len(verts)
    inside = False
    for i in range(n):
        a, b = verts[i], verts[(i + 1) % n]
        if point_segment_distance(p, Segment(a, b)) <= EPS:
            return Location.BOUNDARY
        if (a.y > p.y) != (b.y > p.y):
            x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y)
            if p.x < x_cross:
                inside = not inside
    return Location.INSIDE if inside else Location.OUTSIDE


def _vertex_parameter(s: Segment, v: Point) -> Optional[float]:
    """Parameter of v along s when v lies on s (within EPS), else None"""
    dx, dy = s.b.x - s.a.x, s.b.y - s.a.y
    length = math.hypot(dx, dy)
    if length == 0.0:
        return None
    if abs(orientation(s.a, s.b, v)) > EPS * length:
        return None
    t = ((v.x - s.a.x) * dx + (v.y - s.a.y) * dy) / (length * length)
    if -EPS <= t <= 1.0 + EPS:
        return min(1.0, max(0.0, t))
    return None


def segment_crosses_interior(s: Segment, poly: Polygon) -> bool:
    """True when the open segment passes through the polygon's open interior.

    Endpoints are assumed not to be strictly inside the polygon. Grazing a
    vertex or running along an edge does not count.
    """
    bbox = poly.bbox
    if (
        max(s.a.x, s.b.x) < bbox.min.x or min(s.a.x, s.b.x) > bbox.max.x
        or max(s.a.y, s.b.y) < bbox.min.y or min(s.a.y, s.b.y) > bbox.max.y
    ):
        return False

    for edge in poly.edges():
        if segments_intersect(s, edge) is IntersectKind.PROPER:
            return True

    if s.a == s.b:
        return False

    # between consecutive boundary contacts the segment is wholly inside or outside
    params = {0.0, 1.0}
    for v in poly.vertices:
        t = _vertex_parameter(s, v)
        if t is not None:
            params.add(t)
    ordered = sorted(params)
    for t0, t1 in zip(ordered, ordered[1:]):
        if t1 - t0 <= EPS:
            continue
        if point_in_polygon(s.point_at((t0 + t1) / 2.0), poly) is Location.INSIDE:
            return True
    return False


def segment_intersects_rect(s: Segment, r: Rect) -> bool:
    """True when the segment meets the closed rectangle"""
    if r.contains(s.a) or r.contains(s.b):
        return True
    if (
        max(s.a.x, s.b.x) < r.min.x or min(s.a.x, s.b.x) > r.max.x
        or max(s.a.y, s.b.y) < r.min.y or min(s.a.y, s.b.y) > r.max.y
    ):
        return False
    return any(segments_intersect(s, edge) is not IntersectKind.NONE for edge in r.edges())


def _polygons_intersect(p: Polygon, q: Polygon) -> bool:
    if not p.bbox.touches(q.bbox, tol=0.0):
        return False
    for e in p.edges():
        for f in q.edges():
            if segments_intersect(e, f) is not IntersectKind.NONE:
                return True
    # no edge contact: either disjoint or one nested in the other
    return (
        point_in_polygon(p.vertices[0], q) is not Location.OUTSIDE
        or point_in_polygon(q.vertices[0], p) is not Location.OUTSIDE
    )


@dataclass(frozen=True)
class ObstacleSet:
    """Pairwise disjoint simple polygons"""
    polygons: Tuple[Polygon, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "polygons", tuple(self.polygons))
        for i in range(len(self.polygons)):
            for j in range(i + 1, len(self.polygons)):
                if _polygons_intersect(self.polygons[i], self.polygons[j]):
                    raise OverlappingObstacles(i, j)

    def __len__(self) -> int:
        return len(self.polygons)

    def __iter__(self) -> Iterator[Polygon]:
        return iter(self.polygons)

    def __bool__(self) -> bool:
        return bool(self.polygons)

    def vertices(self) -> List[Point]:
        return [v for poly in self.polygons for v in poly.vertices]

    def edges(self) -> List[Segment]:
        return [e for poly in self.polygons for e in poly.edges()]

    def containing(self, p: Point) -> Optional[int]:
        """Index of the obstacle whose open interior holds p, if any"""
        for idx, poly in enumerate(self.polygons):
            if point_in_polygon(p, poly) is Location.INSIDE:
                return idx
        return None

    def strictly_inside(self, p: Point) -> bool:
        return self.containing(p) is not None


def segment_blocked(s: Segment, obstacles: ObstacleSet) -> bool:
    """True iff the open segment passes through the interior of any obstacle"""
    for endpoint in (s.a, s.b):
        if obstacles.strictly_inside(endpoint):
            raise EndpointInsideObstacle(f"Point {endpoint} lies inside an obstacle")
    return any(segment_crosses_interior(s, poly) for poly in obstacles)


class PointSet:
    """The N input points as an (N, 2) float array; row order defines point ids"""

    def __init__(self, coords: ArrayLike):
        arr = np.asarray(coords, dtype=np.float64)
        if arr.size == 0:
            arr = arr.reshape(0, 2)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise InvalidParameter(f"Point array must have shape (N, 2), got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InvalidParameter("Point coordinates must be finite")
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        self.coords = arr

    @classmethod
    def from_points(cls, points: Iterable[Point]) -> "PointSet":
        return cls([p.as_tuple() for p in points])

    def __len__(self) -> int:
        return int(self.coords.shape[0])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PointSet):
            return NotImplemented
        return np.array_equal(self.coords, other.coords)

    def __repr__(self) -> str:
        return f"PointSet(n={len(self)})"

    def point(self, index: int) -> Point:
        x, y = self.coords[index]
        return Point(float(x), float(y))

    def take(self, indices: ArrayLike) -> "PointSet":
        return PointSet(self.coords[np.asarray(indices, dtype=np.intp)])

    def concat(self, other: "PointSet") -> "PointSet":
        return PointSet(np.vstack([self.coords, other.coords]))

    def bounds(self) -> Rect:
        """Tight bounding box; a zero extent on an axis is padded by 0.5 each side"""
        if len(self) == 0:
            raise InvalidParameter("Empty point set has no bounds")
        lo = self.coords.min(axis=0)
        hi = self.coords.max(axis=0)
        min_x, max_x = float(lo[0]), float(hi[0])
        min_y, max_y = float(lo[1]), float(hi[1])
        if max_x <= min_x:
            min_x, max_x = min_x - 0.5, max_x + 0.5
        if max_y <= min_y:
            min_y, max_y = min_y - 0.5, max_y + 0.5
        return Rect.from_bounds(min_x, min_y, max_x, max_y)

"""
Geometry Core Module
"""

from .main import (
    EPS,
    IntersectKind,
    Location,
    ObstacleSet,
    Point,
    PointSet,
    Polygon,
    Rect,
    Segment,
    distance,
    orientation,
    point_in_polygon,
    segment_blocked,
    segment_crosses_interior,
    segment_intersects_rect,
    segments_intersect,
)

__all__ = [
    'EPS', 'IntersectKind', 'Location', 'ObstacleSet', 'Point', 'PointSet', 'Polygon', 'Rect', 'Segment',
    'distance', 'orientation', 'point_in_polygon', 'segment_blocked', 'segment_crosses_interior',
    'segment_intersects_rect', 'segments_intersect',
]

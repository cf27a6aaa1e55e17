"""
Obstacle Engine Module
"""

from ..geom_core import ObstacleSet
from .main import (
    NO_PATH,
    EdgeIndex,
    ObstructedDistanceOracle,
    PieceGrid,
    SubCell,
    VisibilityGraph,
    build_visibility_graph,
    decompose_subcells,
    label_dense_subcell,
    mark_obstructed_cells,
    obstructed_distance,
)

__all__ = [
    'NO_PATH', 'EdgeIndex', 'ObstacleSet', 'ObstructedDistanceOracle', 'PieceGrid', 'SubCell',
    'VisibilityGraph', 'build_visibility_graph', 'decompose_subcells', 'label_dense_subcell',
    'mark_obstructed_cells', 'obstructed_distance',
]

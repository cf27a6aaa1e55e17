"""
CPO Clusterer Module
"""

from .main import (
    DEFAULT_POINTS_PER_CELL,
    MAX_PIECES_PER_AXIS,
    MIN_PIECES_PER_AXIS,
    POINTS_PER_PIECE,
    AutoGridConfig,
    CpoService,
    CpoWfcParams,
    ObstructedClusterResult,
    Unit,
    auto_grid,
    auto_grid_config,
    build_units,
    cpo_wcc,
    cpo_wfc,
    find_center_obstructed,
    grow_unit_regions,
    piece_count_for_wcc,
    unit_adjacency,
)

__all__ = [
    'DEFAULT_POINTS_PER_CELL', 'MAX_PIECES_PER_AXIS', 'MIN_PIECES_PER_AXIS', 'POINTS_PER_PIECE',
    'AutoGridConfig', 'CpoService', 'CpoWfcParams', 'ObstructedClusterResult', 'Unit', 'auto_grid',
    'auto_grid_config', 'build_units', 'cpo_wcc', 'cpo_wfc', 'find_center_obstructed',
    'grow_unit_regions', 'piece_count_for_wcc', 'unit_adjacency',
]

"""
Grid Engine Module
"""

from .main import (
    CellStats,
    Grid,
    GridConfig,
    Region,
    assign_cells,
    build_grid,
    dense_threshold,
    find_dense_regions,
    grid_shape,
    grow_regions,
    label_dense,
    neighbors,
    rebuild_cells,
    region_mean,
)

__all__ = [
    'CellStats', 'Grid', 'GridConfig', 'Region', 'assign_cells', 'build_grid', 'dense_threshold',
    'find_dense_regions', 'grid_shape', 'grow_regions', 'label_dense', 'neighbors', 'rebuild_cells',
    'region_mean',
]

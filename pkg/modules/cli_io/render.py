"""
SVG rendering of scenes and clusterings
"""

import logging
import os
from typing import Optional, Sequence, Union

import matplotlib
import numpy as np
from matplotlib.colors import to_hex
from matplotlib.figure import Figure
from matplotlib.patches import Polygon as PolygonPatch
from numpy.typing import ArrayLike

from ..core.errors import IoError, LengthMismatch
from ..geom_core import ObstacleSet, PointSet, Rect
from ..grid_engine import Grid

logger = logging.getLogger(__name__)

NOISE_COLOR = "#b0b0b0"
OBSTACLE_COLOR = "#5f7d95"
GRID_COLOR = "#9a9a9a"
PALETTE = "tab20"


def cluster_color(cluster_id: int) -> str:
    """Hex colour of a cluster id; ids cycle through the palette"""
    if cluster_id < 0:
        return NOISE_COLOR
    cmap = matplotlib.colormaps[PALETTE]
    return to_hex(cmap(cluster_id % cmap.N))


def _scene_bounds(points: PointSet, obstacles: Optional[ObstacleSet], grid: Optional[Grid]) -> Rect:
    if grid is not None:
        return grid.bounds
    xs = list(points.coords[:, 0]) if len(points) else []
    ys = list(points.coords[:, 1]) if len(points) else []
    if obstacles:
        xs += [v.x for v in obstacles.vertices()]
        ys += [v.y for v in obstacles.vertices()]
    if not xs:
        return Rect.from_bounds(0.0, 0.0, 1.0, 1.0)
    lo_x, hi_x, lo_y, hi_y = min(xs), max(xs), min(ys), max(ys)
    pad = 0.02 * max(hi_x - lo_x, hi_y - lo_y, 1.0)
    return Rect.from_bounds(lo_x - pad, lo_y - pad, hi_x + pad, hi_y + pad)


def render_svg(points: PointSet, path: str, assignments: Optional[Union[ArrayLike, Sequence[int]]] = None,
               obstacles: Optional[ObstacleSet] = None, grid: Optional[Grid] = None,
               title: Optional[str] = None) -> str:
    """Draw one dot per point coloured by cluster (noise grey), filled obstacles and optional grid lines"""
    labels = None
    if assignments is not None:
        labels = np.asarray(assignments, dtype=np.int64)
        if len(labels) != len(points):
            raise LengthMismatch(f"{len(labels)} assignments for {len(points)} points")

    bounds = _scene_bounds(points, obstacles, grid)
    fig = Figure(figsize=(6, 6 * bounds.height / bounds.width if bounds.width else 6))
    ax = fig.add_subplot(1, 1, 1)
    ax.set_xlim(bounds.min.x, bounds.max.x)
    ax.set_ylim(bounds.min.y, bounds.max.y)
    ax.set_aspect("equal")
    ax.set_xticks([])
    ax.set_yticks([])
    if title:
        ax.set_title(title)

    if grid is not None:
        xs = [bounds.min.x + i * grid.cell_width for i in range(grid.cols + 1)]
        ys = [bounds.min.y + i * grid.cell_height for i in range(grid.rows + 1)]
        ax.vlines(xs, bounds.min.y, bounds.max.y, colors=GRID_COLOR, linestyles="dotted", linewidths=0.5)
        ax.hlines(ys, bounds.min.x, bounds.max.x, colors=GRID_COLOR, linestyles="dotted", linewidths=0.5)

    for poly in obstacles or ():
        ax.add_patch(PolygonPatch(
            [v.as_tuple() for v in poly.vertices],
            closed=True, facecolor=OBSTACLE_COLOR, edgecolor=OBSTACLE_COLOR, zorder=2,
        ))

    if len(points):
        if labels is None:
            colors = [NOISE_COLOR] * len(points)
        else:
            palette = {int(c): cluster_color(int(c)) for c in np.unique(labels)}
            colors = [palette[int(c)] for c in labels]
        ax.scatter(points.coords[:, 0], points.coords[:, 1], s=4, c=colors, linewidths=0, zorder=3)

    try:
        parent = os.path.dirname(path)
        if parent:
            os.makedirs(parent, exist_ok=True)
        with matplotlib.rc_context({"svg.hashsalt": "spatial-clustering", "svg.fonttype": "none"}):
            fig.savefig(path, format="svg", metadata={"Date": None})
    except OSError as e:
        raise IoError(f"Error writing {path}: {e}") from e
    logger.info("Rendered %d points to %s", len(points), path)
    return path

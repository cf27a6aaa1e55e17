"""
CPO Clusterer Module
Obstacle-aware grid clustering over cells and sub-cells, with obstructed centre selection
"""

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.typing import ArrayLike
from typing_extensions import Final

from ..core.dispatcher import Service
from ..core.errors import CenterUndefined, EmptyPointSet, InvalidParameter
from ..geom_core import ObstacleSet, Point, PointSet, Polygon, Rect, distance
from ..grid_engine import Grid, GridConfig, Region, build_grid, grow_regions, neighbors, region_mean
from ..obstacle_engine import (
    ObstructedDistanceOracle,
    decompose_subcells,
    label_dense_subcell,
    mark_obstructed_cells,
)
from ..obstacle_engine.main import MarkingMode
from ..scld_clusterer import Candidate, Cluster, ClusterResult, build_assignments, extend_regions

logger = logging.getLogger(__name__)

DEFAULT_POINTS_PER_CELL: Final = 200
POINTS_PER_PIECE: Final = 50
MIN_PIECES_PER_AXIS: Final = 4
MAX_PIECES_PER_AXIS: Final = 64


@dataclass(frozen=True)
class CpoWfcParams:
    """m: cell count (perfect square), h: density proportion"""
    m: int
    h: float = 0.9
    bounds: Optional[Rect] = None
    workers: int = 1
    marking: MarkingMode = "exact"

    def grid_config(self) -> GridConfig:
        return GridConfig(m=self.m, h=self.h, bounds=self.bounds, workers=self.workers)


@dataclass(frozen=True)
class AutoGridConfig:
    """Scene height la and width lo, cell height x and width y, target points per cell t"""
    la: float
    lo: float
    x: float
    y: float
    t: float
    per_axis: int

    @property
    def cell_count(self) -> int:
        return self.per_axis * self.per_axis


@dataclass
class Unit:
    """A clustering unit: a whole non-obstructed cell, or a sub-cell (id m + j)"""
    unit_id: int
    parent_cell: int
    count: int
    mean: Optional[Point]
    anchor: Optional[Point]
    weight: float
    members: np.ndarray = field(repr=False)
    footprint: Tuple[Rect, ...] = field(repr=False)
    dense: bool
    is_subcell: bool


@dataclass
class ObstructedClusterResult(ClusterResult):
    units: Dict[int, Unit] = field(default_factory=dict, repr=False)
    obstacles: ObstacleSet = field(default_factory=ObstacleSet, repr=False)
    threshold: float = 0.0


def piece_count_for_wcc(n_c: int) -> int:
    """Pieces per axis so that a piece holds about POINTS_PER_PIECE points"""
    k = math.ceil(math.sqrt(n_c / POINTS_PER_PIECE)) if n_c > 0 else 0
    return min(MAX_PIECES_PER_AXIS, max(MIN_PIECES_PER_AXIS, k))


def _anchor(mean: Optional[Point], footprint: Sequence[Rect], obstacles: ObstacleSet) -> Optional[Point]:
    # sub-cell means can fall inside an obstacle; pieces never do
    if mean is None or not obstacles.strictly_inside(mean):
        return mean
    nearest = min(footprint, key=lambda r: distance(r.center, mean))
    return nearest.center


def build_units(grid: Grid, points: PointSet, obstacles: ObstacleSet, threshold: float,
                pieces_per_axis: Union[int, None] = None) -> List[Unit]:
    """Non-empty clustering units of a grid whose obstructed cells are already marked.

    Obstructed cells are replaced by their sub-cells, split into
    ``pieces_per_axis`` squared pieces (sized per cell when None). Enclosed
    cells contribute no unit.
    """
    units: List[Unit] = []
    next_sub = grid.m
    for cell in grid.cells:
        if cell.n_c == 0 or cell.enclosed:
            continue
        if not cell.obstructed:
            units.append(Unit(
                unit_id=cell.cell_id,
                parent_cell=cell.cell_id,
                count=cell.n_c,
                mean=cell.m_c,
                anchor=cell.m_c,
                weight=1.0,
                members=cell.member_indices,
                footprint=(cell.rect,),
                dense=cell.n_c >= threshold,
                is_subcell=False,
            ))
            continue
        k = pieces_per_axis or piece_count_for_wcc(cell.n_c)
        for sc in decompose_subcells(cell, obstacles, k, points):
            sc = label_dense_subcell(sc, threshold)
            if sc.n_sc > 0:
                units.append(Unit(
                    unit_id=next_sub,
                    parent_cell=cell.cell_id,
                    count=sc.n_sc,
                    mean=sc.m_sc,
                    anchor=_anchor(sc.m_sc, sc.piece_rects, obstacles),
                    weight=sc.P_sc,
                    members=sc.member_indices,
                    footprint=sc.piece_rects,
                    dense=sc.dense,
                    is_subcell=True,
                ))
            next_sub += 1
    logger.debug("%d units (%d sub-cells), %d dense",
                 len(units), sum(u.is_subcell for u in units), sum(u.dense for u in units))
    return units


def _units_touch(u: Unit, v: Unit, u_rect: Rect, v_rect: Rect, obstacles: ObstacleSet) -> bool:
    near_u = [r for r in u.footprint if r.touches(v_rect)]
    near_v = [r for r in v.footprint if r.touches(u_rect)]
    for a in near_u:
        for b in near_v:
            contact = a.contact_point(b)
            if contact is not None and not obstacles.strictly_inside(contact):
                return True
    return False


def unit_adjacency(grid: Grid, units: Sequence[Unit], obstacles: ObstacleSet) -> Dict[int, List[int]]:
    """Neighbour lists under the obstacle-aware rule.

    Two whole cells are neighbours when the grid says so. Otherwise some piece
    rectangles of the two footprints must touch at a point outside every
    obstacle.
    """
    by_cell: Dict[int, List[Unit]] = {}
    for u in units:
        by_cell.setdefault(u.parent_cell, []).append(u)

    adjacency: Dict[int, List[int]] = {u.unit_id: [] for u in units}
    for u in units:
        for cid in neighbors(grid, u.parent_cell):
            for v in by_cell.get(cid, ()):
                if v.unit_id < u.unit_id:
                    continue
                if u.is_subcell or v.is_subcell:
                    linked = _units_touch(u, v, grid.cells[u.parent_cell].rect,
                                          grid.cells[cid].rect, obstacles)
                else:
                    linked = True
                if linked:
                    adjacency[u.unit_id].append(v.unit_id)
                    adjacency[v.unit_id].append(u.unit_id)
    for nbrs in adjacency.values():
        nbrs.sort()
    return adjacency


def grow_unit_regions(units: Mapping[int, Unit], adjacency: Mapping[int, List[int]]) -> List[Region]:
    groups = grow_regions(
        [uid for uid, u in units.items() if u.dense],
        lambda uid: adjacency[uid],
        lambda uid: units[uid].dense,
    )
    return [
        Region(
            region_id=rid,
            units=group,
            point_count=sum(units[g].count for g in group),
            t=sum(units[g].weight for g in group),
            member_indices=[units[g].members for g in group],
        )
        for rid, group in enumerate(groups)
    ]


def find_center_obstructed(region: Region, units: Mapping[int, Unit], points: PointSet,
                           oracle: ObstructedDistanceOracle, workers: int = 1) -> Point:
    """Centre of a cluster that never lies inside an obstacle.

    The mean of the cluster's points when it is outside every obstacle.
    Otherwise the anchor of the unit minimising the sum over the other units of
    count times squared obstructed distance; lower unit id wins ties. A unit's
    anchor is its mean, or the centre of its nearest piece when that mean is
    itself inside an obstacle.
    """
    mean = region_mean(points, region)
    if not oracle.obstacles.strictly_inside(mean):
        return mean

    candidates = [units[u] for u in region.units if units[u].count > 0 and units[u].anchor is not None]

    def cost(c: Unit) -> float:
        others = [u for u in candidates if u.unit_id != c.unit_id]
        assert c.anchor is not None
        dists = oracle.distances_from(c.anchor, [u.anchor for u in others])
        return sum(u.count * dd * dd for u, dd in zip(others, dists))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            costs = list(executor.map(cost, candidates))
    else:
        costs = [cost(c) for c in candidates]

    best: Optional[Tuple[float, int]] = None
    choice: Optional[Point] = None
    for c, value in zip(candidates, costs):
        if math.isinf(value):
            continue
        if best is None or (value, c.unit_id) < best:
            best, choice = (value, c.unit_id), c.anchor
    if best is None or choice is None:
        raise CenterUndefined(f"No reachable centre for cluster {region.region_id}")
    logger.debug("Cluster %d mean lies in an obstacle; centre moved to unit %d", region.region_id, best[1])
    return choice


def _result(regions: List[Region], units: Dict[int, Unit], grid: Grid, points: PointSet,
            obstacles: ObstacleSet, oracle: ObstructedDistanceOracle, params: Any,
            threshold: float, workers: int, timings: Dict[str, float]) -> ObstructedClusterResult:
    start = time.perf_counter()
    clusters = [
        Cluster(r.region_id, list(r.units), r.point_count, r.t,
                find_center_obstructed(r, units, points, oracle, workers))
        for r in regions
    ]
    timings = dict(timings, center=time.perf_counter() - start)
    timings["total"] = sum(timings.values())
    return ObstructedClusterResult(
        assignments=build_assignments(len(points), regions),
        clusters=clusters,
        grid=grid,
        points=points,
        params=params,
        units=units,
        obstacles=obstacles,
        threshold=threshold,
        timings=timings,
    )


def cpo_wfc(points: PointSet, obstacles: ObstacleSet, params: CpoWfcParams) -> ObstructedClusterResult:
    """Obstacle-aware clustering on a fixed m-cell grid, with cluster extension"""
    if not obstacles:
        logger.warning("cpo_wfc called without obstacles")
    start = time.perf_counter()
    grid = build_grid(points, params.grid_config())
    grid = mark_obstructed_cells(grid, obstacles, mode=params.marking)
    grid = replace(grid, cells=[
        replace(c, dense=not c.obstructed and not c.enclosed and c.n_c > 0 and c.n_c >= grid.d)
        for c in grid.cells
    ])

    unit_list = build_units(grid, points, obstacles, grid.d, pieces_per_axis=grid.w)
    units = {u.unit_id: u for u in unit_list}
    adjacency = unit_adjacency(grid, unit_list, obstacles)
    oracle = ObstructedDistanceOracle(obstacles, workers=params.workers)
    built = time.perf_counter()

    regions = grow_unit_regions(units, adjacency)
    centers = [find_center_obstructed(r, units, points, oracle, params.workers) for r in regions]
    logger.debug("Phase 1: %d clusters", len(regions))

    candidates = [
        Candidate(u.unit_id, u.count, u.anchor, u.members, u.weight)
        for u in unit_list if not u.dense
    ]
    regions = extend_regions(regions, candidates, lambda uid: adjacency.get(uid, ()), grid.d,
                             centers, dist=oracle.distance)
    timings = {"build": built - start, "cluster": time.perf_counter() - built}
    result = _result(regions, units, grid, points, obstacles, oracle, params, grid.d, params.workers, timings)
    logger.info("CPO-WFC: %d clusters, %d noise points of %d",
                len(result.clusters), result.noise_count, len(points))
    return result


def auto_grid_config(n: int, bounds: Rect) -> AutoGridConfig:
    """Equal subdivisions per axis targeting DEFAULT_POINTS_PER_CELL points per cell"""
    if n < 1:
        raise EmptyPointSet("Cannot size a grid for an empty point set")
    k = math.floor(math.sqrt(n / DEFAULT_POINTS_PER_CELL) + 0.5)
    k = min(max(k, 2), math.isqrt(n)) if n >= 4 else 1
    return AutoGridConfig(
        la=bounds.height,
        lo=bounds.width,
        x=bounds.height / k,
        y=bounds.width / k,
        t=n / (k * k),
        per_axis=k,
    )


def auto_grid(points: PointSet, obstacles: ObstacleSet, bounds: Optional[Rect] = None,
              marking: MarkingMode = "exact") -> Tuple[Grid, float]:
    """Grid with obstructed cells marked and density threshold t = N / cell count"""
    if len(points) == 0:
        raise EmptyPointSet("Cannot build a grid over an empty point set")
    cfg = auto_grid_config(len(points), bounds or points.bounds())
    grid = build_grid(points, GridConfig(m=cfg.cell_count, h=1.0, bounds=bounds))
    grid = replace(grid, d=cfg.t)
    grid = mark_obstructed_cells(grid, obstacles, mode=marking)
    logger.debug("Auto grid: %dx%d cells of %.4g x %.4g, t=%.4g", cfg.per_axis, cfg.per_axis, cfg.x, cfg.y, cfg.t)
    return grid, cfg.t


def cpo_wcc(points: PointSet, obstacles: ObstacleSet, bounds: Optional[Rect] = None,
            workers: int = 1) -> ObstructedClusterResult:
    """Obstacle-aware clustering on an automatically sized grid; no extension step"""
    if not obstacles:
        logger.warning("cpo_wcc called without obstacles")
    start = time.perf_counter()
    grid, t = auto_grid(points, obstacles, bounds)
    grid = replace(grid, cells=[
        replace(c, dense=not c.obstructed and not c.enclosed and c.n_c > 0 and c.n_c >= t)
        for c in grid.cells
    ])

    unit_list = build_units(grid, points, obstacles, t)
    units = {u.unit_id: u for u in unit_list}
    adjacency = unit_adjacency(grid, unit_list, obstacles)
    oracle = ObstructedDistanceOracle(obstacles, workers=workers)
    built = time.perf_counter()

    regions = grow_unit_regions(units, adjacency)
    timings = {"build": built - start, "cluster": time.perf_counter() - built}
    result = _result(regions, units, grid, points, obstacles, oracle,
                     {"algorithm": "cpo-wcc", "t": t, "cells": grid.m}, t, workers, timings)
    logger.info("CPO-WCC: %d clusters, %d noise points of %d",
                len(result.clusters), result.noise_count, len(points))
    return result


def _as_points(value: Union[PointSet, ArrayLike]) -> PointSet:
    return value if isinstance(value, PointSet) else PointSet(value)


def _as_obstacles(value: Any) -> ObstacleSet:
    if value is None:
        return ObstacleSet()
    if isinstance(value, ObstacleSet):
        return value
    return ObstacleSet(tuple(p if isinstance(p, Polygon) else Polygon.from_coords(p) for p in value))


class CpoService(Service):
    def __init__(self):
        super().__init__()
        self.supported_actions = {
            "cluster_wfc": self._cluster_wfc,
            "cluster_wcc": self._cluster_wcc,
        }

    def _cluster_wfc(self, data: Dict[str, Any]) -> ObstructedClusterResult:
        if "points" not in data or "m" not in data:
            raise InvalidParameter("cluster_wfc requires 'points' and 'm'")
        params = CpoWfcParams(
            m=int(data["m"]),
            h=float(data.get("h", 0.9)),
            bounds=data.get("bounds"),
            workers=int(data.get("workers", 1)),
            marking=data.get("marking", "exact"),
        )
        return cpo_wfc(_as_points(data["points"]), _as_obstacles(data.get("obstacles")), params)

    def _cluster_wcc(self, data: Dict[str, Any]) -> ObstructedClusterResult:
        if "points" not in data:
            raise InvalidParameter("cluster_wcc requires 'points'")
        return cpo_wcc(_as_points(data["points"]), _as_obstacles(data.get("obstacles")),
                       bounds=data.get("bounds"), workers=int(data.get("workers", 1)))

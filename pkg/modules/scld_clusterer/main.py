"""
SCLD Clusterer Module
Two-phase grid clustering: dense regions and centres, then extension by neighbouring cells
"""

import logging
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Set, Union

import numpy as np
from numpy.typing import ArrayLike
from typing_extensions import Final

from ..core.dispatcher import Service
from ..core.errors import InvalidParameter, UnknownPointId
from ..geom_core import Point, PointSet, Rect, distance
from ..grid_engine import (
    Grid,
    GridConfig,
    Region,
    assign_cells,
    build_grid,
    find_dense_regions,
    label_dense,
    neighbors,
    rebuild_cells,
    region_mean,
)

logger = logging.getLogger(__name__)

NOISE_ID: Final = -1


class Noise(Enum):
    NOISE = "noise"


@dataclass(frozen=True)
class ScldParams:
    """m: cell count (perfect square), h: density proportion"""
    m: int
    h: float = 0.9
    bounds: Optional[Rect] = None
    workers: int = 1

    def grid_config(self) -> GridConfig:
        return GridConfig(m=self.m, h=self.h, bounds=self.bounds, workers=self.workers)


@dataclass
class Cluster:
    cluster_id: int
    units: List[int]
    point_count: int
    t: float
    center: Point


@dataclass
class ClusterResult:
    """Per-point cluster ids (NOISE_ID for noise) plus the clusters and grid they came from"""
    assignments: np.ndarray = field(repr=False)
    clusters: List[Cluster]
    grid: Grid = field(repr=False)
    points: PointSet = field(repr=False)
    params: Any
    timings: Dict[str, float] = field(default_factory=dict)

    @property
    def noise_count(self) -> int:
        return int(np.count_nonzero(self.assignments == NOISE_ID))

    @property
    def centers(self) -> List[Point]:
        return [c.center for c in self.clusters]

    def label(self, index: int) -> Union[int, Noise]:
        value = int(self.assignments[index])
        return Noise.NOISE if value == NOISE_ID else value

    def members(self, cluster_id: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == cluster_id)


@dataclass
class Candidate:
    """A non-dense unit that may extend a neighbouring cluster"""
    unit_id: int
    count: int
    mean: Optional[Point]
    members: np.ndarray = field(repr=False)
    weight: float = 1.0


def extend_regions(regions: List[Region], candidates: Sequence[Candidate],
                   adjacent: Callable[[int], Iterable[int]], d: float, centers: Sequence[Point],
                   dist: Callable[[Point, Point], float] = distance) -> List[Region]:
    """Single greedy pass that attaches candidate units to qualifying neighbouring clusters.

    The queue holds non-empty candidates adjacent to some region at the start,
    largest count first (lower unit id on ties). A unit joins the nearest
    qualifying cluster, measured from ``centers`` (fixed for the whole pass);
    a cluster qualifies when ``point_count + count >= d * (t + weight)``.
    """
    extended = [r.copy() for r in regions]
    owner: Dict[int, int] = {u: r.region_id for r in extended for u in r.units}
    by_id = {r.region_id: r for r in extended}

    queue = sorted(
        (c for c in candidates
         if c.count > 0 and c.unit_id not in owner
         and any(n in owner for n in adjacent(c.unit_id))),
        key=lambda c: (-c.count, c.unit_id),
    )
    logger.debug("Extension queue holds %d units", len(queue))

    joined = 0
    for cand in queue:
        nearby: Set[int] = {owner[n] for n in adjacent(cand.unit_id) if n in owner}
        best = None
        for rid in sorted(nearby):
            region = by_id[rid]
            if region.point_count + cand.count < d * (region.t + cand.weight):
                continue
            key = (dist(cand.mean, centers[rid]), rid) if cand.mean is not None else (0.0, rid)
            if best is None or key < best:
                best = key
        if best is None:
            continue
        region = by_id[best[1]]
        region.units.append(cand.unit_id)
        region.point_count += cand.count
        region.t += cand.weight
        region.member_indices.append(cand.members)
        owner[cand.unit_id] = region.region_id
        joined += 1

    for region in extended:
        region.units.sort()
    logger.debug("%d units joined clusters", joined)
    return extended


def extend_clusters(grid: Grid, regions: List[Region], points: PointSet) -> List[Region]:
    """Phase 2: attach non-dense cells using Euclidean distance to the phase-1 centres"""
    centers = [region_mean(points, r) for r in regions]
    candidates = [
        Candidate(c.cell_id, c.n_c, c.m_c, c.member_indices)
        for c in grid.cells if not c.dense
    ]
    return extend_regions(regions, candidates, lambda cid: neighbors(grid, cid), grid.d, centers)


def build_assignments(n: int, regions: Sequence[Region]) -> np.ndarray:
    assignments = np.full(n, NOISE_ID, dtype=np.int64)
    for region in regions:
        assignments[region.indices()] = region.region_id
    return assignments


def _cluster_grid(grid: Grid, points: PointSet, params: ScldParams, build_seconds: float) -> ClusterResult:
    start = time.perf_counter()
    grid = label_dense(grid)
    regions = find_dense_regions(grid)
    regions = extend_clusters(grid, regions, points)
    clustered = time.perf_counter()
    clusters = [
        Cluster(r.region_id, list(r.units), r.point_count, r.t, region_mean(points, r))
        for r in regions
    ]
    done = time.perf_counter()
    timings = {
        "build": build_seconds,
        "cluster": clustered - start,
        "center": done - clustered,
        "total": build_seconds + (done - start),
    }
    result = ClusterResult(build_assignments(len(points), regions), clusters, grid, points, params, timings)
    logger.info("SCLD: %d clusters, %d noise points of %d", len(clusters), result.noise_count, len(points))
    return result


def scld(points: PointSet, params: ScldParams) -> ClusterResult:
    """Cluster points with the two-phase grid algorithm"""
    start = time.perf_counter()
    grid = build_grid(points, params.grid_config())
    return _cluster_grid(grid, points, params, time.perf_counter() - start)


def incremental_update(prev: ClusterResult, added: Optional[PointSet] = None,
                       removed: Iterable[int] = ()) -> ClusterResult:
    """Re-cluster after adding and removing points.

    The updated point ids are the surviving previous points in their original
    order followed by the added points. When the scene bounds are unchanged
    only the touched cells are re-counted; the result always equals ``scld``
    on the merged point set.
    """
    n_prev = len(prev.points)
    removed_ids = sorted(set(int(i) for i in removed))
    for rid in removed_ids:
        if not 0 <= rid < n_prev:
            raise UnknownPointId(rid)
    added = added if added is not None else PointSet(np.empty((0, 2)))

    keep = np.ones(n_prev, dtype=bool)
    keep[removed_ids] = False
    points = prev.points.take(np.flatnonzero(keep)).concat(added)
    params: ScldParams = prev.params

    if len(points) == 0 or (params.bounds is None and points.bounds() != prev.grid.bounds):
        if len(points):
            logger.warning("Scene bounds changed; rebuilding the whole grid")
        return scld(points, params)

    start = time.perf_counter()
    old = prev.grid
    added_cells = assign_cells(added.coords, old.bounds, old.rows, old.cols)
    cell_of_point = np.concatenate([old.cell_of_point[keep], added_cells]).astype(np.int64)
    touched = set(int(c) for c in old.cell_of_point[removed_ids]) | set(int(c) for c in added_cells)
    logger.debug("Incremental update: +%d -%d points, %d touched cells",
                 len(added), len(removed_ids), len(touched))
    grid = rebuild_cells(old, points, cell_of_point, touched)
    return _cluster_grid(grid, points, params, time.perf_counter() - start)


def _as_points(value: Union[PointSet, ArrayLike]) -> PointSet:
    return value if isinstance(value, PointSet) else PointSet(value)


class ScldService(Service):
    def __init__(self):
        super().__init__()
        self.supported_actions = {
            "cluster": self._cluster,
            "update": self._update,
        }

    def _cluster(self, data: Dict[str, Any]) -> ClusterResult:
        if "points" not in data or "m" not in data:
            raise InvalidParameter("cluster requires 'points' and 'm'")
        params = ScldParams(
            m=int(data["m"]),
            h=float(data.get("h", 0.9)),
            bounds=data.get("bounds"),
            workers=int(data.get("workers", 1)),
        )
        return scld(_as_points(data["points"]), params)

    def _update(self, data: Dict[str, Any]) -> ClusterResult:
        prev = data.get("previous")
        if not isinstance(prev, ClusterResult):
            raise InvalidParameter("update requires a previous ClusterResult")
        added = data.get("added")
        return incremental_update(prev, _as_points(added) if added is not None else None,
                                  data.get("removed", ()))

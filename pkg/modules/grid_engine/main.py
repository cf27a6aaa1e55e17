"""
Grid Engine Module
Builds the cell grid over a scene, labels dense cells and extracts connected dense regions
"""

import logging
import math
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Iterable, List, Optional, Tuple

import numpy as np

from ..core.errors import EmptyPointSet, EmptyRegion, InvalidParameter, NonSquareM
from ..geom_core import Point, PointSet, Rect

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GridConfig:
    """Grid parameters: cell count m, density proportion h and optional scene bounds"""
    m: int
    h: float = 0.9
    bounds: Optional[Rect] = None
    require_square: bool = True
    workers: int = 1

    def __post_init__(self):
        if self.m < 1:
            raise InvalidParameter(f"m must be at least 1, got {self.m}")
        if not (0.0 < self.h <= 1.0):
            raise InvalidParameter(f"h must be in (0, 1], got {self.h}")
        if self.require_square and math.isqrt(self.m) ** 2 != self.m:
            raise NonSquareM(self.m)
        if self.workers < 1:
            raise InvalidParameter(f"workers must be at least 1, got {self.workers}")


@dataclass
class CellStats:
    cell_id: int
    rect: Rect
    n_c: int
    m_c: Optional[Point]
    member_indices: np.ndarray = field(repr=False)
    dense: bool = False
    obstructed: bool = False
    enclosed: bool = False


@dataclass
class Grid:
    """Row-major cell grid; cell 0 is the top-left cell, ids run left to right then top to bottom"""
    config: GridConfig
    rows: int
    cols: int
    bounds: Rect
    d: float
    n_points: int
    cells: List[CellStats]
    cell_of_point: np.ndarray = field(repr=False)
    sums: np.ndarray = field(repr=False)

    @property
    def m(self) -> int:
        return self.rows * self.cols

    @property
    def w(self) -> int:
        return self.cols

    @property
    def cell_width(self) -> float:
        return self.bounds.width / self.cols

    @property
    def cell_height(self) -> float:
        return self.bounds.height / self.rows

    def row_col(self, cell_id: int) -> Tuple[int, int]:
        return divmod(cell_id, self.cols)

    def cell_id(self, row: int, col: int) -> int:
        return row * self.cols + col

    def cell_rect(self, cell_id: int) -> Rect:
        row, col = self.row_col(cell_id)
        y_index = self.rows - 1 - row
        return Rect.from_bounds(
            self.bounds.min.x + col * self.cell_width,
            self.bounds.min.y + y_index * self.cell_height,
            self.bounds.min.x + (col + 1) * self.cell_width,
            self.bounds.min.y + (y_index + 1) * self.cell_height,
        )

    def cell_at(self, p: Point) -> int:
        return int(assign_cells(np.array([[p.x, p.y]]), self.bounds, self.rows, self.cols)[0])

    def dense_cells(self) -> List[int]:
        return [c.cell_id for c in self.cells if c.dense]


@dataclass
class Region:
    """A connected set of units with its running point count and unit weight t"""
    region_id: int
    units: List[int]
    point_count: int
    t: float
    member_indices: List[np.ndarray] = field(default_factory=list, repr=False)

    def indices(self) -> np.ndarray:
        if not self.member_indices:
            return np.empty(0, dtype=np.intp)
        return np.concatenate(self.member_indices)

    def copy(self) -> "Region":
        return Region(self.region_id, list(self.units), self.point_count, self.t, list(self.member_indices))


def grid_shape(m: int, require_square: bool = True) -> Tuple[int, int]:
    """Rows and columns for m cells; non-square m uses the most balanced factorisation"""
    w = math.isqrt(m)
    if w * w == m:
        return w, w
    if require_square:
        raise NonSquareM(m)
    rows = max(r for r in range(1, w + 1) if m % r == 0)
    return rows, m // rows


def dense_threshold(n: int, m: int, h: float) -> int:
    """d = round(N / m * h), rounding halves away from zero"""
    exact = Fraction(n, m) * Fraction(str(h))
    return math.floor(exact + Fraction(1, 2))


def assign_cells(coords: np.ndarray, bounds: Rect, rows: int, cols: int) -> np.ndarray:
    """Cell id per point; cells are half-open, closed on the scene's max boundary"""
    cw = bounds.width / cols
    ch = bounds.height / rows
    ix = np.floor((coords[:, 0] - bounds.min.x) / cw).astype(np.int64)
    iy = np.floor((coords[:, 1] - bounds.min.y) / ch).astype(np.int64)
    np.clip(ix, 0, cols - 1, out=ix)
    np.clip(iy, 0, rows - 1, out=iy)
    return (rows - 1 - iy) * cols + ix


def _accumulate(coords: np.ndarray, cell_ids: np.ndarray, m: int) -> Tuple[np.ndarray, np.ndarray]:
    counts = np.bincount(cell_ids, minlength=m)
    sums = np.column_stack([
        np.bincount(cell_ids, weights=coords[:, 0], minlength=m),
        np.bincount(cell_ids, weights=coords[:, 1], minlength=m),
    ])
    return counts, sums


def accumulate_cells(coords: np.ndarray, cell_ids: np.ndarray, m: int, workers: int = 1) -> Tuple[np.ndarray, np.ndarray]:
    """Per-cell counts and coordinate sums, optionally split across worker threads"""
    if workers <= 1 or len(coords) < 2 * workers:
        return _accumulate(coords, cell_ids, m)

    bounds = np.linspace(0, len(coords), workers + 1).astype(np.intp)
    chunks = [(coords[lo:hi], cell_ids[lo:hi]) for lo, hi in zip(bounds, bounds[1:])]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        partials = list(executor.map(lambda chunk: _accumulate(chunk[0], chunk[1], m), chunks))
    counts = np.sum([p[0] for p in partials], axis=0)
    sums = np.sum([p[1] for p in partials], axis=0)
    return counts, sums


def _members_by_cell(cell_of_point: np.ndarray, counts: np.ndarray) -> List[np.ndarray]:
    order = np.argsort(cell_of_point, kind="stable")
    return np.split(order, np.cumsum(counts)[:-1])


def _cell_mean(count: int, point_sum: np.ndarray) -> Optional[Point]:
    if count == 0:
        return None
    return Point(float(point_sum[0] / count), float(point_sum[1] / count))


def build_grid(points: PointSet, config: GridConfig) -> Grid:
    """Divide the scene into m cells and collect n_c, m_c and members for each"""
    n = len(points)
    if n == 0:
        raise EmptyPointSet("Cannot build a grid over an empty point set")
    rows, cols = grid_shape(config.m, config.require_square)
    if config.m > n:
        logger.warning("Grid has more cells (%d) than points (%d)", config.m, n)

    bounds = config.bounds or points.bounds()
    coords = points.coords
    if config.bounds is not None:
        outside = (
            (coords[:, 0] < bounds.min.x) | (coords[:, 0] > bounds.max.x)
            | (coords[:, 1] < bounds.min.y) | (coords[:, 1] > bounds.max.y)
        )
        if outside.any():
            logger.warning("%d points lie outside the configured bounds and were clamped to border cells",
                           int(outside.sum()))

    cell_of_point = assign_cells(coords, bounds, rows, cols)
    counts, sums = accumulate_cells(coords, cell_of_point, config.m, config.workers)
    grid = Grid(
        config=config,
        rows=rows,
        cols=cols,
        bounds=bounds,
        d=dense_threshold(n, config.m, config.h),
        n_points=n,
        cells=[],
        cell_of_point=cell_of_point,
        sums=sums,
    )
    members = _members_by_cell(cell_of_point, counts)
    grid.cells = [
        CellStats(
            cell_id=cid,
            rect=grid.cell_rect(cid),
            n_c=int(counts[cid]),
            m_c=_cell_mean(int(counts[cid]), sums[cid]),
            member_indices=members[cid],
        )
        for cid in range(config.m)
    ]
    logger.debug("Built %dx%d grid over %d points, d=%s", rows, cols, n, grid.d)
    return grid


def rebuild_cells(grid: Grid, points: PointSet, cell_of_point: np.ndarray, touched: Iterable[int]) -> Grid:
    """Grid for a changed point set on unchanged bounds.

    Only touched cells get fresh counts and sums; the others keep their
    previous statistics. Member lists are re-derived for every cell because
    point ids may have shifted.
    """
    m = grid.m
    touched_ids = np.array(sorted(set(touched)), dtype=np.int64)
    counts = np.array([c.n_c for c in grid.cells], dtype=np.int64)
    sums = grid.sums.copy()
    if len(touched_ids):
        mask = np.isin(cell_of_point, touched_ids)
        fresh_counts, fresh_sums = _accumulate(points.coords[mask], cell_of_point[mask], m)
        counts[touched_ids] = fresh_counts[touched_ids]
        sums[touched_ids] = fresh_sums[touched_ids]

    members = _members_by_cell(cell_of_point, counts)
    touched_set = set(int(t) for t in touched_ids)
    cells = []
    for old in grid.cells:
        cid = old.cell_id
        if cid in touched_set:
            m_c = _cell_mean(int(counts[cid]), sums[cid])
        else:
            m_c = old.m_c
        cells.append(CellStats(cid, old.rect, int(counts[cid]), m_c, members[cid]))

    n = len(points)
    return Grid(
        config=grid.config,
        rows=grid.rows,
        cols=grid.cols,
        bounds=grid.bounds,
        d=dense_threshold(n, grid.config.m, grid.config.h),
        n_points=n,
        cells=cells,
        cell_of_point=cell_of_point,
        sums=sums,
    )


def label_dense(grid: Grid) -> Grid:
    """Mark cells with n_c >= d (and at least one point) as dense"""
    cells = [replace(c, dense=c.n_c > 0 and c.n_c >= grid.d) for c in grid.cells]
    logger.debug("%d dense cells at d=%s", sum(c.dense for c in cells), grid.d)
    return replace(grid, cells=cells)


def neighbors(grid: Grid, cell_id: int) -> List[int]:
    """Cells sharing an edge or a corner with cell_id"""
    if not 0 <= cell_id < grid.m:
        raise InvalidParameter(f"Cell id {cell_id} outside grid of {grid.m} cells")
    row, col = grid.row_col(cell_id)
    result = []
    for dr in (-1, 0, 1):
        for dc in (-1, 0, 1):
            if dr == 0 and dc == 0:
                continue
            r, c = row + dr, col + dc
            if 0 <= r < grid.rows and 0 <= c < grid.cols:
                result.append(grid.cell_id(r, c))
    return sorted(result)


def grow_regions(seeds: Iterable[int], adjacent: Callable[[int], Iterable[int]],
                 is_member: Callable[[int], bool]) -> List[List[int]]:
    """Breadth-first search for maximal connected groups of member units.

    Seeds are visited in ascending order, so the regions come out ordered by
    their smallest unit id.
    """
    visited = set()
    regions = []
    for seed in sorted(seeds):
        if seed in visited or not is_member(seed):
            continue
        visited.add(seed)
        region = [seed]
        queue = deque([seed])
        while queue:
            unit = queue.popleft()
            for nbr in adjacent(unit):
                if nbr not in visited and is_member(nbr):
                    visited.add(nbr)
                    region.append(nbr)
                    queue.append(nbr)
        regions.append(sorted(region))
    return regions


def find_dense_regions(grid: Grid) -> List[Region]:
    """Maximal connected components of dense cells under 8-connectivity"""
    groups = grow_regions(
        grid.dense_cells(),
        lambda cid: neighbors(grid, cid),
        lambda cid: grid.cells[cid].dense,
    )
    regions = []
    for rid, units in enumerate(groups):
        regions.append(Region(
            region_id=rid,
            units=units,
            point_count=sum(grid.cells[u].n_c for u in units),
            t=float(len(units)),
            member_indices=[grid.cells[u].member_indices for u in units],
        ))
    logger.debug("Found %d dense regions", len(regions))
    return regions


def region_mean(points: PointSet, region: Region) -> Point:
    """Arithmetic mean of all points in the region"""
    idx = region.indices()
    if len(idx) == 0:
        raise EmptyRegion(f"Region {region.region_id} holds no points")
    mean = points.coords[np.sort(idx)].mean(axis=0)
    return Point(float(mean[0]), float(mean[1]))

"""
Obstacle Engine Module
Obstructed-cell marking, sub-cell decomposition, visibility graph and obstructed distance
"""

import heapq
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Dict, FrozenSet, List, Optional, Sequence, Set, Tuple

import numpy as np
from typing_extensions import Final, Literal

from ..core.errors import EndpointInsideObstacle, InvalidParameter, NoPathError
from ..geom_core import (
    EPS,
    ObstacleSet,
    Point,
    PointSet,
    Rect,
    Segment,
    distance,
    segment_crosses_interior,
    segment_intersects_rect,
)
from ..grid_engine import CellStats, Grid, grow_regions

logger = logging.getLogger(__name__)

NO_PATH: Final = math.inf
VISIBILITY_CACHE_SIZE: Final = 4096

MarkingMode = Literal["exact", "bisection"]


def _index_range(lo: float, hi: float, origin: float, size: float, count: int) -> range:
    first = max(0, math.floor((lo - origin) / size) - 1)
    last = min(count - 1, math.floor((hi - origin) / size) + 1)
    return range(first, last + 1)


def _touches_bbox(s: Segment, r: Rect) -> bool:
    return not (
        max(s.a.x, s.b.x) < r.min.x or min(s.a.x, s.b.x) > r.max.x
        or max(s.a.y, s.b.y) < r.min.y or min(s.a.y, s.b.y) > r.max.y
    )


def _exact_marks(grid: Grid, obstacles: ObstacleSet) -> Set[int]:
    marked: Set[int] = set()
    for edge in obstacles.edges():
        cols = _index_range(min(edge.a.x, edge.b.x), max(edge.a.x, edge.b.x),
                            grid.bounds.min.x, grid.cell_width, grid.cols)
        y_indices = _index_range(min(edge.a.y, edge.b.y), max(edge.a.y, edge.b.y),
                                 grid.bounds.min.y, grid.cell_height, grid.rows)
        for yi in y_indices:
            row = grid.rows - 1 - yi
            for col in cols:
                cid = grid.cell_id(row, col)
                if cid not in marked and segment_intersects_rect(edge, grid.cells[cid].rect):
                    marked.add(cid)
    return marked


def _bisection_marks(grid: Grid, obstacles: ObstacleSet, resolution: float) -> Set[int]:
    marked: Set[int] = set()

    def mark(p: Point) -> None:
        if grid.bounds.contains(p):
            marked.add(grid.cell_at(p))

    for edge in obstacles.edges():
        mark(edge.a)
        mark(edge.b)
        stack = [edge]
        while stack:
            seg = stack.pop()
            if seg.length <= resolution:
                continue
            mid = seg.point_at(0.5)
            mark(mid)
            stack.append(Segment(seg.a, mid))
            stack.append(Segment(mid, seg.b))
    return marked


def mark_obstructed_cells(grid: Grid, obstacles: ObstacleSet, mode: MarkingMode = "exact",
                          resolution: Optional[float] = None) -> Grid:
    """Label cells whose rectangle meets an obstacle boundary as obstructed.

    ``mode="exact"`` tests every boundary edge against candidate cell
    rectangles. ``mode="bisection"`` marks the cells holding each edge's
    vertices and successive midpoints until pieces are no longer than
    ``resolution`` (default: the smaller cell side); it marks a subset of the
    exact result.

    Non-obstructed cells whose centre lies strictly inside an obstacle are
    flagged ``enclosed``.
    """
    if mode == "exact":
        marked = _exact_marks(grid, obstacles)
    elif mode == "bisection":
        e = resolution if resolution is not None else min(grid.cell_width, grid.cell_height)
        if e <= 0:
            raise InvalidParameter(f"Bisection resolution must be positive, got {e}")
        marked = _bisection_marks(grid, obstacles, e)
    else:
        raise InvalidParameter(f"Unknown marking mode: {mode}")

    cells = []
    for cell in grid.cells:
        obstructed = cell.cell_id in marked
        enclosed = False
        if not obstructed and obstacles:
            enclosed = obstacles.strictly_inside(cell.rect.center)
        cells.append(replace(cell, obstructed=obstructed, enclosed=enclosed))
    logger.debug("%d obstructed cells (%s marking), %d enclosed",
                 len(marked), mode, sum(c.enclosed for c in cells))
    return replace(grid, cells=cells)


@dataclass
class SubCell:
    """Maximal connected group of non-obstructed pieces inside one cell"""
    parent_cell: int
    pieces: FrozenSet[int]
    piece_rects: Tuple[Rect, ...] = field(repr=False)
    n_sc: int
    m_sc: Optional[Point]
    P_sc: float
    member_indices: np.ndarray = field(repr=False)
    dense: bool = False


class PieceGrid:
    """k x k pieces of a cell rectangle, numbered like the cell grid (top-left first)"""

    def __init__(self, rect: Rect, k: int):
        if k < 1:
            raise InvalidParameter(f"Pieces per axis must be at least 1, got {k}")
        self.rect = rect
        self.k = k
        self.pw = rect.width / k
        self.ph = rect.height / k

    def piece_rect(self, piece: int) -> Rect:
        row, col = divmod(piece, self.k)
        yi = self.k - 1 - row
        return Rect.from_bounds(
            self.rect.min.x + col * self.pw,
            self.rect.min.y + yi * self.ph,
            self.rect.min.x + (col + 1) * self.pw,
            self.rect.min.y + (yi + 1) * self.ph,
        )

    def neighbors(self, piece: int) -> List[int]:
        row, col = divmod(piece, self.k)
        out = []
        for dr in (-1, 0, 1):
            for dc in (-1, 0, 1):
                r, c = row + dr, col + dc
                if (dr or dc) and 0 <= r < self.k and 0 <= c < self.k:
                    out.append(r * self.k + c)
        return out

    def assign(self, coords: np.ndarray) -> np.ndarray:
        ix = np.clip(np.floor((coords[:, 0] - self.rect.min.x) / self.pw).astype(np.int64), 0, self.k - 1)
        iy = np.clip(np.floor((coords[:, 1] - self.rect.min.y) / self.ph).astype(np.int64), 0, self.k - 1)
        return (self.k - 1 - iy) * self.k + ix


def _boundary_pieces(pieces: PieceGrid, obstacles: ObstacleSet) -> Set[int]:
    hit: Set[int] = set()
    for poly in obstacles:
        if not poly.bbox.touches(pieces.rect, tol=0.0):
            continue
        for edge in poly.edges():
            if not _touches_bbox(edge, pieces.rect):
                continue
            cols = _index_range(min(edge.a.x, edge.b.x), max(edge.a.x, edge.b.x),
                                pieces.rect.min.x, pieces.pw, pieces.k)
            y_indices = _index_range(min(edge.a.y, edge.b.y), max(edge.a.y, edge.b.y),
                                     pieces.rect.min.y, pieces.ph, pieces.k)
            for yi in y_indices:
                for col in cols:
                    piece = (pieces.k - 1 - yi) * pieces.k + col
                    if piece not in hit and segment_intersects_rect(edge, pieces.piece_rect(piece)):
                        hit.add(piece)
    return hit


def decompose_subcells(cell: CellStats, obstacles: ObstacleSet, pieces_per_axis: int,
                       points: PointSet) -> List[SubCell]:
    """Split a cell into sub-cells of non-obstructed pieces.

    Pieces meeting an obstacle boundary, or lying strictly inside an obstacle,
    are obstructed. Points in obstructed pieces belong to no sub-cell.
    """
    pieces = PieceGrid(cell.rect, pieces_per_axis)
    total = pieces.k * pieces.k
    blocked = _boundary_pieces(pieces, obstacles)
    groups = grow_regions(range(total), pieces.neighbors, lambda p: p not in blocked)

    coords = points.coords[cell.member_indices]
    piece_of_point = pieces.assign(coords) if len(coords) else np.empty(0, dtype=np.int64)

    subcells = []
    for group in groups:
        # a piece group touches no boundary, so one sample decides the whole group
        if obstacles.strictly_inside(pieces.piece_rect(group[0]).center):
            continue
        mask = np.isin(piece_of_point, group)
        members = np.sort(cell.member_indices[mask])
        mean = None
        if len(members):
            mu = points.coords[members].mean(axis=0)
            mean = Point(float(mu[0]), float(mu[1]))
        subcells.append(SubCell(
            parent_cell=cell.cell_id,
            pieces=frozenset(group),
            piece_rects=tuple(pieces.piece_rect(p) for p in group),
            n_sc=len(members),
            m_sc=mean,
            P_sc=len(group) / total,
            member_indices=members,
        ))
    logger.debug("Cell %d: %d blocked pieces of %d, %d sub-cells",
                 cell.cell_id, len(blocked), total, len(subcells))
    return subcells


def label_dense_subcell(sc: SubCell, threshold: float) -> SubCell:
    """Dense iff n_sc / threshold >= P_sc"""
    if threshold <= 0:
        raise InvalidParameter(f"Density threshold must be positive, got {threshold}")
    return replace(sc, dense=sc.n_sc > 0 and sc.n_sc / threshold >= sc.P_sc)


class EdgeIndex:
    """Uniform bucket grid over obstacle edges, mapping buckets to obstacle ids"""

    def __init__(self, obstacles: ObstacleSet, buckets_per_axis: Optional[int] = None):
        self.obstacles = obstacles
        self._buckets: Dict[Tuple[int, int], Set[int]] = {}
        self.extent: Optional[Rect] = None
        if not obstacles:
            return
        xs = [v.x for v in obstacles.vertices()]
        ys = [v.y for v in obstacles.vertices()]
        self.extent = Rect.from_bounds(min(xs), min(ys), max(xs), max(ys))
        n_edges = len(obstacles.edges())
        self.k = buckets_per_axis or max(1, math.ceil(math.sqrt(n_edges)))
        self.bw = self.extent.width / self.k
        self.bh = self.extent.height / self.k
        for idx, poly in enumerate(obstacles):
            for edge in poly.edges():
                for key in self._keys(edge):
                    self._buckets.setdefault(key, set()).add(idx)

    def _keys(self, s: Segment) -> List[Tuple[int, int]]:
        assert self.extent is not None
        if not _touches_bbox(s, self.extent):
            return []
        xr = _index_range(min(s.a.x, s.b.x), max(s.a.x, s.b.x), self.extent.min.x, self.bw, self.k)
        yr = _index_range(min(s.a.y, s.b.y), max(s.a.y, s.b.y), self.extent.min.y, self.bh, self.k)
        return [(bx, by) for bx in xr for by in yr]

    def candidates(self, s: Segment) -> List[int]:
        if self.extent is None:
            return []
        found: Set[int] = set()
        for key in self._keys(s):
            found.update(self._buckets.get(key, ()))
        return sorted(found)


@dataclass
class VisibilityGraph:
    """Obstacle vertices joined when mutually visible, weighted by Euclidean length"""
    nodes: List[Point]
    adjacency: Dict[int, List[Tuple[int, float]]]

    def edge_set(self) -> Set[Tuple[int, int]]:
        return {(i, j) for i, nbrs in self.adjacency.items() for j, _ in nbrs if i < j}

    @property
    def edge_count(self) -> int:
        return len(self.edge_set())


def _visible(s: Segment, obstacles: ObstacleSet, index: Optional[EdgeIndex]) -> bool:
    ids = index.candidates(s) if index is not None else range(len(obstacles))
    return not any(segment_crosses_interior(s, obstacles.polygons[i]) for i in ids)


def build_visibility_graph(obstacles: ObstacleSet, workers: int = 1, use_index: bool = True) -> VisibilityGraph:
    """All-pairs vertex visibility, optionally accelerated by an EdgeIndex"""
    nodes = obstacles.vertices()
    index = EdgeIndex(obstacles) if use_index else None

    def scan(i: int) -> List[Tuple[int, int, float]]:
        found = []
        for j in range(i + 1, len(nodes)):
            if _visible(Segment(nodes[i], nodes[j]), obstacles, index):
                found.append((i, j, distance(nodes[i], nodes[j])))
        return found

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            batches = list(executor.map(scan, range(len(nodes))))
    else:
        batches = [scan(i) for i in range(len(nodes))]

    adjacency: Dict[int, List[Tuple[int, float]]] = {i: [] for i in range(len(nodes))}
    for batch in batches:
        for i, j, w in batch:
            adjacency[i].append((j, w))
            adjacency[j].append((i, w))
    for nbrs in adjacency.values():
        nbrs.sort()
    graph = VisibilityGraph(nodes, adjacency)
    logger.debug("Visibility graph: %d nodes, %d edges", len(nodes), graph.edge_count)
    return graph


class ObstructedDistanceOracle:
    """Shortest obstacle-avoiding distances over the visibility graph plus query points"""

    def __init__(self, obstacles: ObstacleSet, graph: Optional[VisibilityGraph] = None, workers: int = 1,
                 cache_size: int = VISIBILITY_CACHE_SIZE):
        self.obstacles = obstacles
        self.index = EdgeIndex(obstacles)
        self.graph = graph if graph is not None else build_visibility_graph(obstacles, workers=workers)
        self._visible_from = lru_cache(maxsize=cache_size)(self._scan_visible)

    def check_outside(self, p: Point) -> None:
        if self.obstacles.strictly_inside(p):
            raise EndpointInsideObstacle(f"Point {p} lies inside an obstacle")

    def visible(self, p: Point, q: Point) -> bool:
        return _visible(Segment(p, q), self.obstacles, self.index)

    def _scan_visible(self, x: float, y: float) -> List[Tuple[int, float]]:
        p = Point(x, y)
        return [(i, distance(p, v)) for i, v in enumerate(self.graph.nodes) if self.visible(p, v)]

    def visible_vertices(self, p: Point) -> List[Tuple[int, float]]:
        """vis(p): graph nodes visible from p with their distances; the most recent queries are cached"""
        return self._visible_from(p.x, p.y)

    def cache_info(self):
        return self._visible_from.cache_info()

    def clear_cache(self) -> None:
        self._visible_from.cache_clear()

    def _dijkstra(self, p: Point) -> Tuple[List[float], List[int]]:
        n = len(self.graph.nodes)
        dist = [math.inf] * n
        prev = [-1] * n
        heap: List[Tuple[float, int]] = []
        for node, w in self.visible_vertices(p):
            if w < dist[node]:
                dist[node] = w
                heapq.heappush(heap, (w, node))
        done = [False] * n
        while heap:
            cost, u = heapq.heappop(heap)
            if done[u]:
                continue
            done[u] = True
            for v, w in self.graph.adjacency[u]:
                nxt = cost + w
                if nxt < dist[v]:
                    dist[v] = nxt
                    prev[v] = u
                    heapq.heappush(heap, (nxt, v))
        return dist, prev

    def _finish(self, dist: Sequence[float], q: Point) -> Tuple[float, int]:
        best, via = NO_PATH, -1
        for node, w in self.visible_vertices(q):
            if dist[node] + w < best:
                best, via = dist[node] + w, node
        return best, via

    def distances_from(self, p: Point, targets: Sequence[Point]) -> List[float]:
        """d'(p, q) for every target with one shortest-path run from p"""
        self.check_outside(p)
        for q in targets:
            self.check_outside(q)
        dist: Optional[List[float]] = None
        out = []
        for q in targets:
            if self.visible(p, q):
                out.append(distance(p, q))
                continue
            if dist is None:
                dist, _ = self._dijkstra(p)
            out.append(self._finish(dist, q)[0])
        return out

    def distance(self, p: Point, q: Point) -> float:
        return self.distances_from(p, [q])[0]

    def shortest_path(self, p: Point, q: Point) -> Tuple[float, List[Point]]:
        """Length and bend points (p, obstacle vertices..., q) of a shortest path"""
        self.check_outside(p)
        self.check_outside(q)
        if self.visible(p, q):
            return distance(p, q), [p, q]
        dist, prev = self._dijkstra(p)
        length, via = self._finish(dist, q)
        if via < 0:
            raise NoPathError(f"No obstacle-avoiding path from {p} to {q}")
        chain = []
        node = via
        while node >= 0:
            chain.append(self.graph.nodes[node])
            node = prev[node]
        return length, [p] + chain[::-1] + [q]


def obstructed_distance(p: Point, q: Point, oracle: ObstructedDistanceOracle) -> float:
    """d'(p, q); NO_PATH when q cannot be reached from p"""
    return oracle.distance(p, q)

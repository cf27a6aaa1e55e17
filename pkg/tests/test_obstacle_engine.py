"""
Tests for Obstacle Engine Module
"""

import itertools
import math

import numpy as np
import pytest

from modules.core.errors import EndpointInsideObstacle, InvalidParameter
from modules.geom_core import ObstacleSet, Point, PointSet, Polygon, Rect, Segment, segment_blocked
from modules.grid_engine import GridConfig, build_grid
from modules.obstacle_engine import (
    EdgeIndex,
    ObstructedDistanceOracle,
    PieceGrid,
    SubCell,
    build_visibility_graph,
    decompose_subcells,
    label_dense_subcell,
    mark_obstructed_cells,
    obstructed_distance,
)


@pytest.fixture
def wall():
    """Wall x in [1.9, 2.1], y in [0, 2] between (0, 1) and (4, 1)"""
    return ObstacleSet((Polygon.from_coords([(1.9, 0), (2.1, 0), (2.1, 2), (1.9, 2)]),))


@pytest.fixture
def scattered():
    return ObstacleSet((
        Polygon.from_coords([(1, 1), (2, 1), (2, 2), (1, 2)]),
        Polygon.from_coords([(3, 0.5), (4.5, 1), (3.5, 2.5)]),
        Polygon.from_coords([(0.5, 3), (2.5, 3), (2.5, 3.4), (1.2, 3.4), (1.2, 4.5), (0.5, 4.5)]),
        Polygon.from_coords([(3.2, 3.2), (4.2, 3.6), (3.6, 4.4)]),
    ))


@pytest.fixture
def river_grid(river_scene, unit_bounds):
    return build_grid(river_scene, GridConfig(m=36, bounds=unit_bounds))


def _lattice(bounds, per_axis=20):
    xs, ys = np.meshgrid(np.linspace(bounds.min.x, bounds.max.x, per_axis),
                         np.linspace(bounds.min.y, bounds.max.y, per_axis))
    return PointSet(np.column_stack([xs.ravel(), ys.ravel()]))


def _subcell(n, share):
    return SubCell(0, frozenset({0}), (), n, None, share, np.arange(n))


def test_exact_marking(river_grid, river):
    marked = mark_obstructed_cells(river_grid, river)
    assert [c.cell_id for c in marked.cells if c.obstructed] == [14, 20, 26]
    assert not any(c.enclosed for c in marked.cells)
    # input grid keeps its flags
    assert not any(c.obstructed for c in river_grid.cells)


def test_bisection_marks_subset_of_exact(river_grid, river, scattered, unit_bounds):
    """Test that sampled marking never marks a cell the exact test rejects"""
    exact = {c.cell_id for c in mark_obstructed_cells(river_grid, river).cells if c.obstructed}
    sampled = {c.cell_id for c in mark_obstructed_cells(river_grid, river, mode="bisection").cells
               if c.obstructed}
    assert sampled == exact

    coarse = mark_obstructed_cells(river_grid, river, mode="bisection", resolution=10.0)
    assert {c.cell_id for c in coarse.cells if c.obstructed} == {14, 26}

    fine_grid = build_grid(_lattice(unit_bounds), GridConfig(m=144, bounds=unit_bounds))
    exact = {c.cell_id for c in mark_obstructed_cells(fine_grid, scattered).cells if c.obstructed}
    sampled = {c.cell_id for c in mark_obstructed_cells(fine_grid, scattered, mode="bisection").cells
               if c.obstructed}
    assert sampled <= exact


def test_marking_rejects_bad_mode(river_grid, river):
    with pytest.raises(InvalidParameter):
        mark_obstructed_cells(river_grid, river, mode="sampled")
    with pytest.raises(InvalidParameter):
        mark_obstructed_cells(river_grid, river, mode="bisection", resolution=0.0)


def test_enclosed_cell(river_grid):
    """Test that a cell swallowed by an obstacle is flagged enclosed, not obstructed"""
    lake = ObstacleSet((Polygon.from_coords([(0.5, 0.5), (2.5, 0.5), (2.5, 2.5), (0.5, 2.5)]),))
    marked = mark_obstructed_cells(river_grid, lake)
    cell = marked.cells[25]
    assert cell.enclosed and not cell.obstructed
    assert {c.cell_id for c in marked.cells if c.obstructed} == {18, 19, 20, 24, 26, 30, 31, 32}


def test_piece_grid_layout():
    pieces = PieceGrid(Rect.from_bounds(0, 0, 3, 3), 3)
    assert pieces.piece_rect(0) == Rect.from_bounds(0, 2, 1, 3)
    assert pieces.piece_rect(8) == Rect.from_bounds(2, 0, 3, 1)
    assert sorted(pieces.neighbors(0)) == [1, 3, 4]
    assert pieces.assign(np.array([[0.5, 2.5], [2.5, 0.5]])).tolist() == [0, 8]
    with pytest.raises(InvalidParameter):
        PieceGrid(Rect.from_bounds(0, 0, 1, 1), 0)


def test_decompose_subcells_east_of_river(river_grid, river, river_scene):
    """Test that the river leaves one sub-cell covering the east half of cell 14"""
    cell = mark_obstructed_cells(river_grid, river).cells[14]
    subcells = decompose_subcells(cell, river, 6, river_scene)
    assert len(subcells) == 1
    sc = subcells[0]
    assert sc.P_sc == pytest.approx(0.5)
    assert sc.n_sc == 300
    assert sc.pieces == frozenset(r * 6 + c for r in range(6) for c in (3, 4, 5))
    assert sc.m_sc.x > 2.5
    assert np.array_equal(sc.member_indices, np.sort(cell.member_indices))


def test_label_dense_subcell():
    assert label_dense_subcell(_subcell(300, 0.5), 125).dense
    assert label_dense_subcell(_subcell(125, 0.25), 200).dense
    assert not label_dense_subcell(_subcell(50, 0.5), 125).dense
    assert not label_dense_subcell(_subcell(0, 0.1), 125).dense
    with pytest.raises(InvalidParameter):
        label_dense_subcell(_subcell(10, 0.5), 0)


def test_edge_index_candidates(scattered):
    index = EdgeIndex(scattered, buckets_per_axis=4)
    assert index.candidates(Segment(Point(10, 10), Point(11, 11))) == []
    assert 0 in index.candidates(Segment(Point(0, 1.5), Point(3, 1.5)))
    assert EdgeIndex(ObstacleSet()).candidates(Segment(Point(0, 0), Point(1, 1))) == []


def test_visibility_graph_matches_brute_force(scattered):
    """Test the indexed graph against checking every vertex pair directly"""
    graph = build_visibility_graph(scattered)
    nodes = scattered.vertices()
    expected = {
        (i, j) for i, j in itertools.combinations(range(len(nodes)), 2)
        if not segment_blocked(Segment(nodes[i], nodes[j]), scattered)
    }
    assert graph.edge_set() == expected
    assert build_visibility_graph(scattered, use_index=False).edge_set() == expected
    assert build_visibility_graph(scattered, workers=3).edge_set() == expected
    # a square's diagonals cross its interior, its sides do not
    assert (0, 2) not in expected
    assert (0, 1) in expected


def test_obstructed_distance_around_wall(wall):
    oracle = ObstructedDistanceOracle(wall)
    p, q = Point(0, 1), Point(4, 1)
    expected = 0.2 + 2 * math.hypot(1.9, 1.0)
    assert obstructed_distance(p, q, oracle) == pytest.approx(expected)
    assert oracle.distance(p, Point(0, 3)) == pytest.approx(2.0)


def test_shortest_path_bends_at_wall_corners(wall):
    oracle = ObstructedDistanceOracle(wall)
    length, path = oracle.shortest_path(Point(0, 1), Point(4, 1))
    assert path[0] == Point(0, 1) and path[-1] == Point(4, 1)
    assert len(path) == 4
    assert set(path[1:-1]) <= set(wall.vertices())
    assert length == pytest.approx(sum(math.hypot(b.x - a.x, b.y - a.y) for a, b in zip(path, path[1:])))


def test_distances_from_mixes_visible_and_hidden(wall):
    oracle = ObstructedDistanceOracle(wall)
    dists = oracle.distances_from(Point(0, 1), [Point(1, 1), Point(4, 1), Point(0, 1)])
    assert dists[0] == pytest.approx(1.0)
    assert dists[1] > 4.0
    assert dists[2] == 0.0


def test_distance_is_symmetric(scattered):
    oracle = ObstructedDistanceOracle(scattered)
    a, b = Point(0, 0), Point(4.8, 4.8)
    assert oracle.distance(a, b) == pytest.approx(oracle.distance(b, a))
    assert oracle.distance(a, b) >= math.hypot(4.8, 4.8)


def test_endpoint_inside_obstacle_rejected(wall):
    oracle = ObstructedDistanceOracle(wall)
    with pytest.raises(EndpointInsideObstacle):
        oracle.distance(Point(2.0, 1.0), Point(4, 1))
    with pytest.raises(EndpointInsideObstacle):
        oracle.distances_from(Point(0, 1), [Point(2.0, 0.5)])


def test_no_obstacles_is_euclidean():
    oracle = ObstructedDistanceOracle(ObstacleSet())
    assert oracle.distance(Point(0, 0), Point(3, 4)) == pytest.approx(5.0)
    assert oracle.graph.edge_count == 0


def _random_obstacles(rng):
    """Up to five star-shaped polygons, one per slot of a 3 x 3 layout over [0, 10]^2"""
    slot = 10 / 3
    polygons = []
    for s in rng.choice(9, size=int(rng.integers(1, 6)), replace=False):
        cx, cy = (s % 3 + 0.5) * slot, (s // 3 + 0.5) * slot
        k = int(rng.integers(3, 9))
        radius = rng.uniform(0.5, 1.5)
        angles = 2 * np.pi * (np.arange(k) + 0.6 * rng.random(k)) / k
        radii = radius * rng.uniform(0.6, 1.0, k)
        polygons.append(Polygon.from_coords(np.column_stack([cx + radii * np.cos(angles),
                                                             cy + radii * np.sin(angles)])))
    return ObstacleSet(tuple(polygons))


def _outside_point(rng, obstacles):
    while True:
        p = Point(*rng.uniform(-1, 11, 2))
        if not obstacles.strictly_inside(p):
            return p


def _brute_force_distance(p, q, obstacles):
    nodes = [p, q] + obstacles.vertices()
    dist = [math.inf] * len(nodes)
    dist[0] = 0.0
    done = [False] * len(nodes)
    for _ in nodes:
        u = min((i for i in range(len(nodes)) if not done[i]), key=dist.__getitem__)
        done[u] = True
        for v in range(len(nodes)):
            if not done[v] and not segment_blocked(Segment(nodes[u], nodes[v]), obstacles):
                dist[v] = min(dist[v], dist[u] + math.hypot(nodes[v].x - nodes[u].x, nodes[v].y - nodes[u].y))
    return dist[1]


def test_distance_matches_brute_force_on_random_scenes():
    """Test the oracle against Dijkstra over the full visibility graph of p, q and all vertices"""
    rng = np.random.Generator(np.random.PCG64(17))
    for _ in range(200):
        obstacles = _random_obstacles(rng)
        assert len(obstacles.vertices()) <= 40
        oracle = ObstructedDistanceOracle(obstacles)
        for _ in range(3):
            p, q = _outside_point(rng, obstacles), _outside_point(rng, obstacles)
            d = oracle.distance(p, q)
            assert d == pytest.approx(_brute_force_distance(p, q, obstacles), abs=1e-9)
            assert d >= math.hypot(q.x - p.x, q.y - p.y) - 1e-12
            assert abs(d - oracle.distance(q, p)) <= 1e-12


def test_distance_triangle_inequality_on_random_scenes():
    rng = np.random.Generator(np.random.PCG64(23))
    for _ in range(100):
        obstacles = _random_obstacles(rng)
        oracle = ObstructedDistanceOracle(obstacles)
        for _ in range(3):
            p, q, r = (_outside_point(rng, obstacles) for _ in range(3))
            pq, qr, pr = oracle.distance(p, q), oracle.distance(q, r), oracle.distance(p, r)
            if not all(math.isfinite(d) for d in (pq, qr, pr)):
                continue
            assert pr <= pq + qr + 1e-9


def test_visibility_cache_is_bounded(scattered):
    """Test that only the most recent query points keep their visible-vertex lists"""
    oracle = ObstructedDistanceOracle(scattered, cache_size=2)
    fresh = ObstructedDistanceOracle(scattered)
    queries = [Point(0, 0), Point(4.8, 4.8), Point(0, 4.8), Point(4.8, 0), Point(2.8, 2.8)]
    for a, b in zip(queries, queries[1:]):
        assert oracle.distance(a, b) == fresh.distance(a, b)
    assert oracle.cache_info().currsize <= 2
    oracle.clear_cache()
    assert oracle.cache_info().currsize == 0

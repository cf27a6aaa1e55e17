"""
Tests for SCLD Clusterer Module
"""

import numpy as np
import pytest

from modules.core.errors import EmptyPointSet, InvalidParameter, UnknownPointId
from modules.geom_core import Point, PointSet, Rect
from modules.grid_engine import Region
from modules.scld_clusterer import (
    NOISE_ID,
    Candidate,
    ClusterResult,
    Noise,
    ScldParams,
    ScldService,
    extend_regions,
    incremental_update,
    scld,
)


@pytest.fixture
def params(unit_bounds):
    return ScldParams(m=36, bounds=unit_bounds)


@pytest.fixture
def result(scld_scene, params):
    return scld(scld_scene, params)


def _cells_of(result, cell_id):
    return set(result.assignments[result.grid.cells[cell_id].member_indices].tolist())


def _region(rid, unit, count):
    return Region(rid, [unit], count, 1.0, [np.arange(count) + 1000 * rid])


def test_three_clusters(result):
    assert len(result.clusters) == 3
    assert result.grid.d == 125
    assert result.clusters[0].units[:2] == [0, 1]


def test_cell_too_heavy_for_small_cluster_joins_neighbour(result):
    """Test that cells 20 and 26 skip the {19, 25} cluster and extend {21, 27}"""
    small = result.clusters[1]
    assert small.units == [19, 25]
    assert small.point_count == 250
    assert small.t == 2.0
    assert _cells_of(result, 20) == {2}
    assert _cells_of(result, 26) == {2}
    assert {20, 21, 26, 27} <= set(result.clusters[2].units)


def test_cells_without_dense_neighbours_stay_noise(result):
    assert _cells_of(result, 3) == {NOISE_ID}
    assert _cells_of(result, 35) == {NOISE_ID}
    assert result.noise_count > 0
    assert result.label(int(result.grid.cells[35].member_indices[0])) is Noise.NOISE
    assert result.label(int(result.grid.cells[0].member_indices[0])) == 0


def test_assignments_cover_every_point(result, scld_scene):
    assert len(result.assignments) == len(scld_scene)
    counted = sum(c.point_count for c in result.clusters) + result.noise_count
    assert counted == len(scld_scene)
    for c in result.clusters:
        assert len(result.members(c.cluster_id)) == c.point_count


def test_centers_are_cluster_means(result, scld_scene):
    for c in result.clusters:
        expected = scld_scene.coords[result.members(c.cluster_id)].mean(axis=0)
        assert c.center.x == pytest.approx(expected[0])
        assert c.center.y == pytest.approx(expected[1])


def test_timings_recorded(result):
    assert set(result.timings) == {"build", "cluster", "center", "total"}
    assert all(v >= 0 for v in result.timings.values())


def test_deterministic(scld_scene, params):
    a = scld(scld_scene, params)
    b = scld(scld_scene, params)
    assert np.array_equal(a.assignments, b.assignments)
    assert a.centers == b.centers


def test_empty_input_rejected(params):
    with pytest.raises(EmptyPointSet):
        scld(PointSet([]), params)


def test_extend_regions_picks_nearest_qualifying_cluster():
    regions = [_region(0, 0, 100), _region(1, 2, 100)]
    centers = [Point(0, 0), Point(2, 0)]
    cand = Candidate(1, 50, Point(1.5, 0), np.arange(50) + 5000)
    extended = extend_regions(regions, [cand], lambda u: {1: [0, 2]}.get(u, []), 50, centers)
    assert extended[1].units == [1, 2]
    assert extended[1].point_count == 150
    assert extended[1].t == 2.0
    # inputs are not modified
    assert regions[1].units == [2]


def test_extend_regions_tie_goes_to_lower_cluster_id():
    regions = [_region(0, 0, 100), _region(1, 2, 100)]
    centers = [Point(0, 0), Point(2, 0)]
    cand = Candidate(1, 50, Point(1, 0), np.arange(50) + 5000)
    extended = extend_regions(regions, [cand], lambda u: {1: [0, 2]}.get(u, []), 50, centers)
    assert extended[0].units == [0, 1]


def test_extend_regions_queue_fixed_at_start():
    """Test that a unit reachable only through a newly joined unit is not queued"""
    adjacency = {1: [0, 3], 3: [1]}
    regions = [_region(0, 0, 500)]
    cands = [
        Candidate(1, 50, Point(1, 0), np.arange(50) + 5000),
        Candidate(3, 60, Point(3, 0), np.arange(60) + 6000),
    ]
    extended = extend_regions(regions, cands, lambda u: adjacency.get(u, []), 50, [Point(0, 0)])
    assert extended[0].units == [0, 1]


def test_extend_regions_largest_first_with_immediate_updates():
    """Test that an earlier join raises the bar for later candidates"""
    adjacency = {1: [0], 2: [0]}
    regions = [_region(0, 0, 120)]
    cands = [
        Candidate(1, 40, Point(1, 0), np.arange(40) + 5000),
        Candidate(2, 45, Point(1, 0), np.arange(45) + 6000),
    ]
    extended = extend_regions(regions, cands, lambda u: adjacency.get(u, []), 50, [Point(0, 0)])
    assert extended[0].units == [0, 1, 2]
    # d = 70: 165 >= 140 admits unit 2, then 205 < 210 turns unit 1 away
    extended = extend_regions(regions, cands, lambda u: adjacency.get(u, []), 70, [Point(0, 0)])
    assert extended[0].units == [0, 2]


def test_extend_regions_skips_empty_candidates():
    regions = [_region(0, 0, 500)]
    cand = Candidate(1, 0, None, np.empty(0, dtype=np.intp))
    extended = extend_regions(regions, [cand], lambda u: [0], 1, [Point(0, 0)])
    assert extended[0].units == [0]


def _assert_same(a: ClusterResult, b: ClusterResult):
    assert np.array_equal(a.assignments, b.assignments)
    assert [(c.units, c.point_count, c.t, c.center) for c in a.clusters] == \
        [(c.units, c.point_count, c.t, c.center) for c in b.clusters]
    assert a.grid.d == b.grid.d


def test_incremental_update_matches_full_recompute(result, scld_scene, params):
    rng = np.random.Generator(np.random.PCG64(7))
    added = PointSet(rng.uniform(0.05, 5.95, size=(300, 2)))
    removed = [0, 1, 2, 401, 2000, 4999]

    updated = incremental_update(result, added, removed)

    keep = np.setdiff1d(np.arange(len(scld_scene)), removed)
    merged = scld_scene.take(keep).concat(added)
    assert updated.points == merged
    _assert_same(updated, scld(merged, params))


def test_incremental_update_add_only_and_remove_only(result, scld_scene, params):
    added = PointSet([[4.5, 1.5]] * 40)
    _assert_same(incremental_update(result, added), scld(scld_scene.concat(added), params))
    removed = list(range(800))
    expected = scld(scld_scene.take(np.arange(800, len(scld_scene))), params)
    _assert_same(incremental_update(result, removed=removed), expected)


def test_incremental_update_unknown_id(result):
    with pytest.raises(UnknownPointId):
        incremental_update(result, removed=[5000])
    with pytest.raises(UnknownPointId):
        incremental_update(result, removed=[-1])


def test_incremental_update_falls_back_when_bounds_change(scld_scene, caplog):
    prev = scld(scld_scene, ScldParams(m=36))
    updated = incremental_update(prev, PointSet([[10.0, 10.0]]))
    assert "bounds changed" in caplog.text
    _assert_same(updated, scld(scld_scene.concat(PointSet([[10.0, 10.0]])), ScldParams(m=36)))


def test_service_cluster_and_update(scld_scene, unit_bounds):
    service = ScldService()
    response = service.process_request({
        "action": "cluster",
        "data": {"points": scld_scene.coords, "m": 36, "bounds": unit_bounds},
    })
    assert response["success"] is True
    assert len(response["data"].clusters) == 3

    response = service.process_request({
        "action": "update",
        "data": {"previous": response["data"], "removed": [0]},
    })
    assert response["success"] is True
    assert len(response["data"].points) == 4999


def test_service_validation_errors(scld_scene):
    service = ScldService()
    response = service.process_request({"action": "cluster", "data": {"points": scld_scene.coords}})
    assert response["success"] is False
    assert response["error_kind"] == "validation"

    response = service.process_request({"action": "cluster", "data": {"points": scld_scene.coords, "m": 10}})
    assert response["success"] is False
    assert response["error_kind"] == "validation"

    response = service.process_request({"action": "update", "data": {"previous": None}})
    assert response["error_kind"] == "validation"


def test_params_validated_through_grid_config():
    with pytest.raises(InvalidParameter):
        scld(PointSet([[0, 0]]), ScldParams(m=4, h=2.0))


def test_incremental_update_on_random_deltas(random_scene, params):
    """Test 100 random add/remove deltas against clustering the merged points from scratch"""
    rng = np.random.Generator(np.random.PCG64(29))
    for seed in range(100):
        points = random_scene(seed, n=1500)
        prev = scld(points, params)
        added = PointSet(rng.uniform(0, 6, size=(int(rng.integers(0, 200)), 2)))
        removed = rng.choice(len(points), size=int(rng.integers(0, 200)), replace=False)

        keep = np.setdiff1d(np.arange(len(points)), removed)
        merged = points.take(keep).concat(added)
        _assert_same(incremental_update(prev, added, removed), scld(merged, params))


@pytest.mark.parametrize("factor", [0.25, 8.0])
def test_scaling_coordinates_scales_centers_only(scld_scene, random_scene, unit_bounds, factor):
    """Test that scaling points and bounds together keeps every assignment"""
    scaled_bounds = Rect.from_bounds(0, 0, unit_bounds.max.x * factor, unit_bounds.max.y * factor)
    for points in [scld_scene] + [random_scene(seed) for seed in range(10)]:
        plain = scld(points, ScldParams(m=36, bounds=unit_bounds))
        scaled = scld(PointSet(points.coords * factor), ScldParams(m=36, bounds=scaled_bounds))
        assert np.array_equal(plain.assignments, scaled.assignments)
        assert [c.units for c in plain.clusters] == [c.units for c in scaled.clusters]
        for a, b in zip(plain.clusters, scaled.clusters):
            assert b.center.x == pytest.approx(a.center.x * factor)
            assert b.center.y == pytest.approx(a.center.y * factor)

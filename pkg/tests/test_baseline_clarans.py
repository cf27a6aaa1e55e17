"""
Tests for CLARANS Baseline Module
"""

import itertools

import numpy as np
import pytest

from modules.baseline_clarans import ClaransParams, ClaransService, clarans, square_error
from modules.core.errors import EmptyPointSet, InvalidParameter, KTooLarge
from modules.geom_core import Point, PointSet


@pytest.fixture
def blobs():
    """Three tight, well separated groups of 20 points"""
    rng = np.random.Generator(np.random.PCG64(3))
    centers = [(0.0, 0.0), (10.0, 0.0), (5.0, 9.0)]
    return PointSet(np.vstack([rng.normal(c, 0.3, size=(20, 2)) for c in centers]))


def _cost(coords, medoids):
    d = np.hypot(coords[:, None, 0] - coords[None, medoids, 0], coords[:, None, 1] - coords[None, medoids, 1])
    return d.min(axis=1).sum()


def test_params_validation():
    with pytest.raises(InvalidParameter):
        ClaransParams(k=0)
    with pytest.raises(InvalidParameter):
        ClaransParams(k=2, numlocal=0)
    with pytest.raises(InvalidParameter):
        ClaransParams(k=2, maxneighbor=0)


def test_resolved_maxneighbor():
    assert ClaransParams(k=5).resolved_maxneighbor(100) == 250
    # 1.25% of k(N - k) once that exceeds 250
    assert ClaransParams(k=10).resolved_maxneighbor(10010) == 1250
    assert ClaransParams(k=5, maxneighbor=7).resolved_maxneighbor(100) == 7


def test_one_medoid_per_blob(blobs):
    solution = clarans(blobs, ClaransParams(k=3, seed=1))
    groups = [set(solution.assignments[i * 20:(i + 1) * 20].tolist()) for i in range(3)]
    assert all(len(g) == 1 for g in groups)
    assert len(set.union(*groups)) == 3
    assert solution.cluster_sizes() == [20, 20, 20]
    assert list(solution.medoids) == sorted(solution.medoids)


def test_result_is_local_minimum(blobs):
    """Test that no single medoid swap lowers the cost once every swap was tried"""
    solution = clarans(blobs, ClaransParams(k=3, numlocal=1, seed=4))
    coords = blobs.coords
    base = _cost(coords, solution.medoids)
    assert solution.cost == pytest.approx(base)
    others = [i for i in range(len(blobs)) if i not in set(solution.medoids.tolist())]
    for slot, cand in itertools.product(range(3), others):
        trial = solution.medoids.copy()
        trial[slot] = cand
        assert _cost(coords, trial) >= base - 1e-9


def test_deterministic_and_thread_independent(blobs):
    a = clarans(blobs, ClaransParams(k=3, numlocal=3, seed=11))
    b = clarans(blobs, ClaransParams(k=3, numlocal=3, seed=11, workers=3))
    assert np.array_equal(a.medoids, b.medoids)
    assert np.array_equal(a.assignments, b.assignments)
    assert a.cost == b.cost

def test_single_medoid_matches_exhaustive_search():
    """Test k = 1 against the point with the smallest total distance to all others"""
    rng = np.random.Generator(np.random.PCG64(8))
    for seed in range(20):
        coords = rng.uniform(0, 10, size=(int(rng.integers(20, 201)), 2))
        totals = np.hypot(coords[:, None, 0] - coords[None, :, 0], coords[:, None, 1] - coords[None, :, 1]).sum(axis=0)
        solution = clarans(PointSet(coords), ClaransParams(k=1, numlocal=5, maxneighbor=len(coords), seed=seed))
        assert solution.medoids.tolist() == [int(np.argmin(totals))]
        assert solution.cost == pytest.approx(totals.min())



def test_k_equals_n():
    points = PointSet([[0, 0], [1, 0], [0, 1]])
    solution = clarans(points, ClaransParams(k=3))
    assert solution.medoids.tolist() == [0, 1, 2]
    assert solution.cost == 0.0


def test_input_errors():
    with pytest.raises(EmptyPointSet):
        clarans(PointSet([]), ClaransParams(k=1))
    with pytest.raises(KTooLarge):
        clarans(PointSet([[0, 0], [1, 1]]), ClaransParams(k=3))


def test_square_error(blobs):
    points = PointSet([[0, 0], [2, 0], [10, 0]])
    assert square_error(points, [Point(1, 0), Point(10, 0)]) == pytest.approx(2.0)
    solution = clarans(blobs, ClaransParams(k=3))
    assert square_error(blobs, solution.centers(blobs)) < square_error(blobs, [Point(5, 3)])
    with pytest.raises(InvalidParameter):
        square_error(points, [])


def test_service(blobs):
    service = ClaransService()
    response = service.process_request({"action": "cluster", "data": {"points": blobs.coords, "k": 3}})
    assert response["success"] is True
    assert len(response["data"].medoids) == 3

    response = service.process_request({"action": "cluster", "data": {"points": blobs.coords, "k": 100}})
    assert response["success"] is False
    assert response["error_kind"] == "validation"

"""
CLARANS Baseline Module
Randomised k-medoid search used as the comparison baseline
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from typing_extensions import Final

from ..core.dispatcher import Service
from ..core.errors import EmptyPointSet, InvalidParameter, KTooLarge
from ..geom_core import Point, PointSet

logger = logging.getLogger(__name__)

DEFAULT_NUMLOCAL: Final = 2
MIN_MAXNEIGHBOR: Final = 250
MAXNEIGHBOR_FRACTION: Final = 0.0125


@dataclass(frozen=True)
class ClaransParams:
    """k medoids, numlocal restarts, maxneighbor failed swaps before a local search stops"""
    k: int
    numlocal: int = DEFAULT_NUMLOCAL
    maxneighbor: Optional[int] = None
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.k < 1:
            raise InvalidParameter(f"k must be at least 1, got {self.k}")
        if self.numlocal < 1:
            raise InvalidParameter(f"numlocal must be at least 1, got {self.numlocal}")
        if self.maxneighbor is not None and self.maxneighbor < 1:
            raise InvalidParameter(f"maxneighbor must be at least 1, got {self.maxneighbor}")
        if self.workers < 1:
            raise InvalidParameter(f"workers must be at least 1, got {self.workers}")

    def resolved_maxneighbor(self, n: int) -> int:
        if self.maxneighbor is not None:
            return self.maxneighbor
        return max(MIN_MAXNEIGHBOR, int(MAXNEIGHBOR_FRACTION * self.k * (n - self.k)))


@dataclass
class MedoidSolution:
    """Medoid point ids (ascending), total distance, and the medoid index of every point"""
    medoids: np.ndarray
    cost: float
    assignments: np.ndarray = field(repr=False)

    def centers(self, points: PointSet) -> List[Point]:
        return [points.point(int(i)) for i in self.medoids]

    def cluster_sizes(self) -> List[int]:
        return np.bincount(self.assignments, minlength=len(self.medoids)).tolist()


def _distances_to(coords: np.ndarray, index: int) -> np.ndarray:
    delta = coords - coords[index]
    return np.hypot(delta[:, 0], delta[:, 1])


class _LocalSearch:
    """Nearest and second-nearest medoid bookkeeping for O(N) swap evaluation"""

    def __init__(self, coords: np.ndarray, medoids: np.ndarray):
        self.coords = coords
        self.medoids = medoids.copy()
        self.dist = np.column_stack([_distances_to(coords, int(m)) for m in self.medoids])
        self._refresh()

    def _refresh(self) -> None:
        k = self.dist.shape[1]
        if k == 1:
            self.nearest = np.zeros(len(self.coords), dtype=np.intp)
            self.d1 = self.dist[:, 0]
            self.d2 = np.full(len(self.coords), np.inf)
        else:
            order = np.argpartition(self.dist, 1, axis=1)[:, :2]
            rows = np.arange(len(self.coords))
            a, b = self.dist[rows, order[:, 0]], self.dist[rows, order[:, 1]]
            swap = b < a
            self.nearest = np.where(swap, order[:, 1], order[:, 0])
            self.d1 = np.minimum(a, b)
            self.d2 = np.maximum(a, b)
        self.cost = float(self.d1.sum())

    def swap_cost(self, slot: int, candidate: int) -> Tuple[float, np.ndarray]:
        dh = _distances_to(self.coords, candidate)
        fallback = np.where(self.nearest == slot, self.d2, self.d1)
        return float(np.minimum(dh, fallback).sum()), dh

    def apply(self, slot: int, candidate: int, dh: np.ndarray) -> None:
        self.medoids[slot] = candidate
        self.dist[:, slot] = dh
        self._refresh()


def _search(coords: np.ndarray, k: int, maxneighbor: int, seed: np.random.SeedSequence) -> Tuple[np.ndarray, float]:
    n = len(coords)
    rng = np.random.Generator(np.random.PCG64(seed))
    state = _LocalSearch(coords, rng.choice(n, size=k, replace=False))
    if k == n:
        return state.medoids, state.cost

    improved = True
    while improved:
        improved = False
        others = np.setdiff1d(np.arange(n), state.medoids)
        order = rng.permutation(k * (n - k))
        failures = 0
        for draw in order:
            slot, pick = divmod(int(draw), n - k)
            new_cost, dh = state.swap_cost(slot, int(others[pick]))
            if new_cost < state.cost:
                state.apply(slot, int(others[pick]), dh)
                improved = True
                break
            failures += 1
            if failures >= maxneighbor:
                break
    return state.medoids, state.cost


def _assign(coords: np.ndarray, medoids: np.ndarray) -> Tuple[np.ndarray, float]:
    dist = np.column_stack([_distances_to(coords, int(m)) for m in medoids])
    return np.argmin(dist, axis=1), float(dist.min(axis=1).sum())


def clarans(points: PointSet, params: ClaransParams) -> MedoidSolution:
    """Best local minimum over ``numlocal`` randomised swap searches"""
    n = len(points)
    if n == 0:
        raise EmptyPointSet("Cannot cluster an empty point set")
    if params.k > n:
        raise KTooLarge(params.k, n)
    maxneighbor = params.resolved_maxneighbor(n)
    seeds = np.random.SeedSequence(params.seed).spawn(params.numlocal)
    coords = points.coords

    if params.workers > 1:
        with ThreadPoolExecutor(max_workers=params.workers) as executor:
            runs = list(executor.map(lambda s: _search(coords, params.k, maxneighbor, s), seeds))
    else:
        runs = [_search(coords, params.k, maxneighbor, s) for s in seeds]

    best = min(range(len(runs)), key=lambda i: (runs[i][1], i))
    medoids = np.sort(runs[best][0])
    assignments, cost = _assign(coords, medoids)
    logger.info("CLARANS k=%d: cost %.6g after %d restarts (maxneighbor=%d)", params.k, cost, params.numlocal, maxneighbor)
    return MedoidSolution(medoids=medoids, cost=cost, assignments=assignments)


def square_error(points: PointSet, centers: Sequence[Point]) -> float:
    """Sum over points of the squared distance to the nearest centre"""
    if not centers:
        raise InvalidParameter("square_error needs at least one centre")
    c = np.array([p.as_tuple() for p in centers], dtype=np.float64)
    diff = points.coords[:, None, :] - c[None, :, :]
    return float((diff ** 2).sum(axis=2).min(axis=1).sum()) if len(points) else 0.0


class ClaransService(Service):
    def __init__(self):
        super().__init__()
        self.supported_actions = {"cluster": self._cluster}

    def _cluster(self, data: Dict[str, Any]) -> MedoidSolution:
        if "points" not in data or "k" not in data:
            raise InvalidParameter("cluster requires 'points' and 'k'")
        points = data["points"]
        params = ClaransParams(
            k=int(data["k"]),
            numlocal=int(data.get("numlocal", DEFAULT_NUMLOCAL)),
            maxneighbor=data.get("maxneighbor"),
            seed=int(data.get("seed", 0)),
            workers=int(data.get("workers", 1)),
        )
        return clarans(points if isinstance(points, PointSet) else PointSet(points), params)

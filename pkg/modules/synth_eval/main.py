"""
Synthetic Evaluation Module
Deterministic scene generators, clustering agreement scores and timing sweeps
"""

import logging
import math
import statistics
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, NamedTuple, Sequence, Tuple

import numpy as np
from numpy.typing import ArrayLike
from sklearn.metrics import adjusted_rand_score
from typing_extensions import Final, Literal

from ..baseline_clarans import ClaransParams, clarans
from ..core.dispatcher import Service
from ..core.errors import InvalidParameter, LengthMismatch
from ..cpo_clusterer import CpoWfcParams, cpo_wcc, cpo_wfc
from ..geom_core import ObstacleSet, PointSet, Polygon, Rect
from ..scld_clusterer import NOISE_ID, ScldParams, scld

logger = logging.getLogger(__name__)

Preset = Literal["ds1_shapes", "ds2_blobs", "obstacle_split", "uniform_noise"]
PRESETS: Final = ("ds1_shapes", "ds2_blobs", "obstacle_split", "uniform_noise")

SCENE_BOUNDS: Final = Rect.from_bounds(0.0, 0.0, 100.0, 100.0)

# obstacle_split layout: a disc cut in two by a wall, plus a separate blob
SPLIT_DISC: Final = (35.0, 50.0, 20.0)
SPLIT_WALL: Final = (34.0, 20.0, 36.0, 80.0)
SPLIT_BLOB: Final = (75.0, 50.0, 12.0)


@dataclass(frozen=True)
class SceneSpec:
    preset: Preset
    n: int
    noise_fraction: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.preset not in PRESETS:
            raise InvalidParameter(f"Unknown preset {self.preset!r}; expected one of {', '.join(PRESETS)}")
        if self.n < 1:
            raise InvalidParameter(f"n must be at least 1, got {self.n}")
        if not 0.0 <= self.noise_fraction < 1.0:
            raise InvalidParameter(f"noise_fraction must be in [0, 1), got {self.noise_fraction}")


@dataclass
class LabeledScene:
    """Points with ground-truth cluster ids (NOISE_ID for noise) and the scene's obstacles"""
    points: PointSet
    truth: np.ndarray = field(repr=False)
    obstacles: ObstacleSet = field(default_factory=ObstacleSet)
    bounds: Rect = SCENE_BOUNDS


class TimingRow(NamedTuple):
    n: int
    seconds: float


def split_counts(total: int, weights: Sequence[float]) -> List[int]:
    """Integer shares of total proportional to weights, summing exactly to total"""
    w = np.asarray(weights, dtype=np.float64)
    raw = total * w / w.sum()
    counts = np.floor(raw).astype(np.int64)
    remainder = total - int(counts.sum())
    # largest fractional parts first, lower index on ties
    order = sorted(range(len(w)), key=lambda i: (-(raw[i] - counts[i]), i))
    for i in order[:remainder]:
        counts[i] += 1
    return counts.tolist()


def _inside_scene(xy: np.ndarray) -> np.ndarray:
    return (
        (xy[:, 0] >= SCENE_BOUNDS.min.x) & (xy[:, 0] <= SCENE_BOUNDS.max.x)
        & (xy[:, 1] >= SCENE_BOUNDS.min.y) & (xy[:, 1] <= SCENE_BOUNDS.max.y)
    )


def _rejection_sample(rng: np.random.Generator, n: int, draw: Callable[[np.random.Generator, int], np.ndarray],
                      keep: Callable[[np.ndarray], np.ndarray] = _inside_scene) -> np.ndarray:
    out = np.empty((0, 2))
    while len(out) < n:
        batch = draw(rng, max(16, 2 * (n - len(out))))
        out = np.vstack([out, batch[keep(batch)]])
    return out[:n]


def _disc(cx: float, cy: float, r: float) -> Callable[[np.random.Generator, int], np.ndarray]:
    def draw(rng: np.random.Generator, n: int) -> np.ndarray:
        radius = r * np.sqrt(rng.random(n))
        theta = rng.uniform(0.0, 2.0 * math.pi, n)
        return np.column_stack([cx + radius * np.cos(theta), cy + radius * np.sin(theta)])
    return draw


def _banana(cx: float, cy: float, radius: float, start: float, end: float,
            thickness: float) -> Callable[[np.random.Generator, int], np.ndarray]:
    def draw(rng: np.random.Generator, n: int) -> np.ndarray:
        theta = rng.uniform(start, end, n)
        rr = radius + rng.normal(0.0, thickness, n)
        return np.column_stack([cx + rr * np.cos(theta), cy + rr * np.sin(theta)])
    return draw


def _ellipse(cx: float, cy: float, a: float, b: float, angle: float) -> Callable[[np.random.Generator, int], np.ndarray]:
    cos_a, sin_a = math.cos(angle), math.sin(angle)

    def draw(rng: np.random.Generator, n: int) -> np.ndarray:
        t = rng.uniform(0.0, 2.0 * math.pi, n)
        rr = np.sqrt(rng.random(n))
        x, y = a * rr * np.cos(t), b * rr * np.sin(t)
        return np.column_stack([cx + x * cos_a - y * sin_a, cy + x * sin_a + y * cos_a])
    return draw


def _elongated(cx: float, cy: float, length: float, angle: float,
               thickness: float) -> Callable[[np.random.Generator, int], np.ndarray]:
    cos_a, sin_a = math.cos(angle), math.sin(angle)

    def draw(rng: np.random.Generator, n: int) -> np.ndarray:
        t = rng.uniform(-length / 2.0, length / 2.0, n)
        o = rng.normal(0.0, thickness, n)
        return np.column_stack([cx + t * cos_a - o * sin_a, cy + t * sin_a + o * cos_a])
    return draw


def _uniform(rng: np.random.Generator, n: int) -> np.ndarray:
    return np.column_stack([
        rng.uniform(SCENE_BOUNDS.min.x, SCENE_BOUNDS.max.x, n),
        rng.uniform(SCENE_BOUNDS.min.y, SCENE_BOUNDS.max.y, n),
    ])


DS1_SHAPES: Final = (
    (_banana(25.0, 70.0, 14.0, -math.pi, 0.2, 1.2), 0.25),
    (_ellipse(72.0, 75.0, 12.0, 6.0, 0.5), 0.2),
    (_elongated(70.0, 30.0, 40.0, -0.6, 1.5), 0.2),
    (_disc(22.0, 22.0, 9.0), 0.2),
    (_ellipse(48.0, 48.0, 4.0, 2.5, 1.2), 0.15),
)

DS2_BLOBS: Final = (
    (_disc(22.0, 25.0, 15.0), 0.4),
    (_disc(72.0, 28.0, 11.0), 0.3),
    (_disc(30.0, 75.0, 8.0), 0.2),
    (_disc(75.0, 78.0, 5.0), 0.1),
)


def _outside_wall(xy: np.ndarray) -> np.ndarray:
    x0, y0, x1, y1 = SPLIT_WALL
    in_wall = (xy[:, 0] >= x0) & (xy[:, 0] <= x1) & (xy[:, 1] >= y0) & (xy[:, 1] <= y1)
    return _inside_scene(xy) & ~in_wall


def split_wall() -> Polygon:
    x0, y0, x1, y1 = SPLIT_WALL
    return Polygon.from_coords([(x0, y0), (x1, y0), (x1, y1), (x0, y1)])


def _shapes_scene(spec: SceneSpec, shapes: Sequence[Tuple[Callable, float]]) -> LabeledScene:
    n_noise = int(round(spec.n * spec.noise_fraction))
    sizes = split_counts(spec.n - n_noise, [w for _, w in shapes])
    streams = np.random.SeedSequence(spec.seed).spawn(len(shapes) + 1)

    parts, labels = [], []
    for label, ((draw, _), size, stream) in enumerate(zip(shapes, sizes, streams)):
        rng = np.random.Generator(np.random.PCG64(stream))
        parts.append(_rejection_sample(rng, size, draw))
        labels.append(np.full(size, label, dtype=np.int64))
    noise_rng = np.random.Generator(np.random.PCG64(streams[-1]))
    parts.append(_rejection_sample(noise_rng, n_noise, _uniform))
    labels.append(np.full(n_noise, NOISE_ID, dtype=np.int64))
    return LabeledScene(PointSet(np.vstack(parts)), np.concatenate(labels))


def _split_scene(spec: SceneSpec) -> LabeledScene:
    wall = split_wall()
    n_noise = int(round(spec.n * spec.noise_fraction))
    dx, dy, dr = SPLIT_DISC
    bx, by, br = SPLIT_BLOB
    # uniform density: shares follow the areas
    disc_n, blob_n = split_counts(spec.n - n_noise, [dr * dr, br * br])
    streams = np.random.SeedSequence(spec.seed).spawn(3)

    disc = _rejection_sample(np.random.Generator(np.random.PCG64(streams[0])), disc_n,
                             _disc(dx, dy, dr), _outside_wall)
    blob = _rejection_sample(np.random.Generator(np.random.PCG64(streams[1])), blob_n,
                             _disc(bx, by, br), _outside_wall)
    noise = _rejection_sample(np.random.Generator(np.random.PCG64(streams[2])), n_noise,
                              _uniform, _outside_wall)
    truth = np.concatenate([
        np.where(disc[:, 0] < dx, 0, 1).astype(np.int64),
        np.full(blob_n, 2, dtype=np.int64),
        np.full(n_noise, NOISE_ID, dtype=np.int64),
    ])
    return LabeledScene(PointSet(np.vstack([disc, blob, noise])), truth, ObstacleSet((wall,)))


def generate(spec: SceneSpec) -> LabeledScene:
    """Build the preset scene with exactly spec.n points"""
    if spec.preset == "ds1_shapes":
        scene = _shapes_scene(spec, DS1_SHAPES)
    elif spec.preset == "ds2_blobs":
        scene = _shapes_scene(spec, DS2_BLOBS)
    elif spec.preset == "obstacle_split":
        scene = _split_scene(spec)
    else:
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(spec.seed)))
        scene = LabeledScene(PointSet(_uniform(rng, spec.n)), np.full(spec.n, NOISE_ID, dtype=np.int64))
    logger.debug("Generated %s scene: %d points, %d obstacles", spec.preset, len(scene.points), len(scene.obstacles))
    return scene


def adjusted_rand_index(truth: ArrayLike, predicted: ArrayLike) -> float:
    """Adjusted Rand index; the noise label counts as one more cluster"""
    a = np.asarray(truth)
    b = np.asarray(predicted)
    if a.shape != b.shape:
        raise LengthMismatch(f"Label arrays differ in length: {a.shape} vs {b.shape}")
    return float(adjusted_rand_score(a, b))


def timing_sweep(algorithm: Callable[[LabeledScene], Any], sizes: Sequence[int], repeats: int = 3,
                 preset: Preset = "ds1_shapes", seed: int = 0, noise_fraction: float = 0.1) -> List[TimingRow]:
    """Median wall time of ``algorithm`` on a generated scene for every size"""
    if list(sizes) != sorted(sizes):
        raise InvalidParameter("sizes must be ascending")
    if repeats < 1:
        raise InvalidParameter(f"repeats must be at least 1, got {repeats}")
    rows = []
    for n in sizes:
        scene = generate(SceneSpec(preset, int(n), noise_fraction, seed))
        samples = []
        for _ in range(repeats):
            start = time.perf_counter()
            algorithm(scene)
            samples.append(time.perf_counter() - start)
        rows.append(TimingRow(int(n), statistics.median(samples)))
        logger.info("n=%d: median %.4fs over %d runs", n, rows[-1].seconds, repeats)
    return rows


def fit_loglog_slope(rows: Sequence[TimingRow]) -> float:
    """Least-squares slope of log(seconds) against log(n)"""
    if len(rows) < 2:
        raise InvalidParameter("A slope needs at least two timing rows")
    n = np.log([r.n for r in rows])
    t = np.log([max(r.seconds, 1e-12) for r in rows])
    slope, _ = np.polyfit(n, t, 1)
    return float(slope)


def make_runner(algo: str, options: Dict[str, Any]) -> Callable[[LabeledScene], Any]:
    """Scene -> result callable for a named algorithm"""
    m = int(options.get("m", 1024))
    h = float(options.get("h", 0.9))
    if algo == "scld":
        return lambda scene: scld(scene.points, ScldParams(m=m, h=h, bounds=scene.bounds))
    if algo == "cpo-wfc":
        return lambda scene: cpo_wfc(scene.points, scene.obstacles, CpoWfcParams(m=m, h=h, bounds=scene.bounds))
    if algo == "cpo-wcc":
        return lambda scene: cpo_wcc(scene.points, scene.obstacles, bounds=scene.bounds)
    if algo == "clarans":
        params = ClaransParams(
            k=int(options.get("k", 5)),
            numlocal=int(options.get("numlocal", 1)),
            seed=int(options.get("seed", 0)),
        )
        return lambda scene: clarans(scene.points, params)
    raise InvalidParameter(f"Unknown algorithm {algo!r}")


class SynthService(Service):
    def __init__(self):
        super().__init__()
        self.supported_actions = {
            "generate": self._generate,
            "bench": self._bench,
        }

    def _generate(self, data: Dict[str, Any]) -> LabeledScene:
        return generate(SceneSpec(
            preset=data.get("preset", "ds1_shapes"),
            n=int(data.get("n", 1000)),
            noise_fraction=float(data.get("noise_fraction", 0.0)),
            seed=int(data.get("seed", 0)),
        ))

    def _bench(self, data: Dict[str, Any]) -> Dict[str, Any]:
        sizes = [int(s) for s in data.get("sizes", [])]
        if not sizes:
            raise InvalidParameter("bench requires at least one size")
        report: Dict[str, Any] = {}
        for algo in data.get("algos", ["scld"]):
            rows = timing_sweep(
                make_runner(algo, data),
                sizes,
                repeats=int(data.get("repeats", 3)),
                preset=data.get("preset", "ds1_shapes"),
                seed=int(data.get("seed", 0)),
            )
            report[algo] = {
                "rows": [row._asdict() for row in rows],
                "loglog_slope": fit_loglog_slope(rows) if len(rows) > 1 else None,
            }
        return report

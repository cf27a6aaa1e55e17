"""
Scene IO Module
Text formats for points, obstacles and assignments, plus result persistence
"""

import dataclasses
import hashlib
import json
import logging
import math
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..baseline_clarans import MedoidSolution
from ..core.dispatcher import Service
from ..core.errors import EmptyFile, InvalidParameter, IoError, ParseError
from ..geom_core import ObstacleSet, PointSet, Polygon
from ..scld_clusterer import ClusterResult
from .render import render_svg

logger = logging.getLogger(__name__)

ASSIGNMENTS_FILE = "assignments.csv"
MANIFEST_FILE = "manifest.json"
ASSIGNMENTS_HEADER = "point_index,cluster_id"

Result = Union[ClusterResult, MedoidSolution]


def _read_text(path: str) -> str:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return f.read()
    except OSError as e:
        raise IoError(f"Error reading {path}: {e}") from e


def _write_text(path: str, content: str) -> None:
    try:
        parent = os.path.dirname(path)
        if parent:
            os.makedirs(parent, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(content)
    except OSError as e:
        raise IoError(f"Error writing {path}: {e}") from e


def file_digest(path: str) -> str:
    """sha256 of a file's bytes"""
    digest = hashlib.sha256()
    try:
        with open(path, "rb") as f:
            for chunk in iter(lambda: f.read(1 << 16), b""):
                digest.update(chunk)
    except OSError as e:
        raise IoError(f"Error reading {path}: {e}") from e
    return digest.hexdigest()


def parse_points(text: str, path: Optional[str] = None) -> PointSet:
    """One "x,y" pair per line; blank lines and lines starting with '#' are skipped"""
    coords: List[Tuple[float, float]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split(",")
        if len(fields) != 2:
            raise ParseError(lineno, f"expected 'x,y', got {line!r}", path)
        try:
            x, y = float(fields[0]), float(fields[1])
        except ValueError:
            raise ParseError(lineno, f"not a number pair: {line!r}", path) from None
        if not (math.isfinite(x) and math.isfinite(y)):
            raise ParseError(lineno, f"coordinates must be finite: {line!r}", path)
        coords.append((x, y))
    if not coords:
        raise EmptyFile(f"No points in {path or 'input'}")
    return PointSet(coords)


def load_points(path: str) -> PointSet:
    points = parse_points(_read_text(path), path)
    logger.debug("Loaded %d points from %s", len(points), path)
    return points


def save_points(points: PointSet, path: str) -> str:
    lines = [f"{float(x)!r},{float(y)!r}" for x, y in points.coords]
    _write_text(path, "\n".join(lines) + ("\n" if lines else ""))
    return path


def parse_obstacles(text: str, path: Optional[str] = None) -> ObstacleSet:
    """A JSON list of {"vertices": [[x, y], ...]} objects"""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(e.lineno, e.msg, path) from None
    if not isinstance(raw, list):
        raise ParseError(1, "expected a list of obstacles", path)
    polygons = []
    for idx, item in enumerate(raw):
        if not isinstance(item, dict) or not isinstance(item.get("vertices"), list):
            raise ParseError(1, f"obstacle {idx} has no 'vertices' list", path)
        try:
            coords = [(float(v[0]), float(v[1])) for v in item["vertices"]]
        except (TypeError, ValueError, IndexError):
            raise ParseError(1, f"obstacle {idx} has a malformed vertex", path) from None
        polygons.append(Polygon.from_coords(coords))
    return ObstacleSet(tuple(polygons))


def load_obstacles(path: str) -> ObstacleSet:
    obstacles = parse_obstacles(_read_text(path), path)
    logger.debug("Loaded %d obstacles from %s", len(obstacles), path)
    return obstacles


def save_obstacles(obstacles: ObstacleSet, path: str) -> str:
    payload = [{"vertices": [[v.x, v.y] for v in poly.vertices]} for poly in obstacles]
    _write_text(path, json.dumps(payload, indent=2) + "\n")
    return path


def load_assignments(path: str) -> np.ndarray:
    """Cluster id per point from an assignments file (NOISE_ID for noise)"""
    lines = _read_text(path).splitlines()
    if not lines:
        raise EmptyFile(f"No assignments in {path}")
    if lines[0].strip() != ASSIGNMENTS_HEADER:
        raise ParseError(1, f"expected header {ASSIGNMENTS_HEADER!r}", path)
    values = []
    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line:
            continue
        fields = line.split(",")
        try:
            index, cluster = int(fields[0]), int(fields[1])
        except (ValueError, IndexError):
            raise ParseError(lineno, f"expected 'point_index,cluster_id', got {line!r}", path) from None
        if index != len(values):
            raise ParseError(lineno, f"point index {index} out of order", path)
        values.append(cluster)
    return np.array(values, dtype=np.int64)


def _jsonable(value: Any) -> Any:
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return {k: _jsonable(v) for k, v in dataclasses.asdict(value).items()}
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.generic):
        return value.item()
    return value


@dataclass
class RunManifest:
    """What ran, on which inputs, how long it took and what came out"""
    algorithm: str
    params: Dict[str, Any] = field(default_factory=dict)
    input_digests: Dict[str, str] = field(default_factory=dict)
    timings: Dict[str, float] = field(default_factory=dict)
    n_points: int = 0
    clusters: List[Dict[str, Any]] = field(default_factory=list)
    noise_count: int = 0

    def __post_init__(self):
        for name, seconds in self.timings.items():
            if seconds < 0:
                raise InvalidParameter(f"Timing {name} is negative: {seconds}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "algorithm": self.algorithm,
            "params": _jsonable(self.params),
            "input_digests": dict(sorted(self.input_digests.items())),
            "timings": {k: self.timings[k] for k in sorted(self.timings)},
            "n_points": self.n_points,
            "clusters": _jsonable(self.clusters),
            "noise_count": self.noise_count,
        }


def cluster_summaries(result: Result, points: Optional[PointSet] = None) -> List[Dict[str, Any]]:
    if isinstance(result, MedoidSolution):
        sizes = result.cluster_sizes()
        return [
            {
                "id": i,
                "medoid": int(m),
                "point_count": sizes[i],
                "center": list(points.point(int(m)).as_tuple()) if points is not None else None,
            }
            for i, m in enumerate(result.medoids)
        ]
    return [
        {
            "id": c.cluster_id,
            "point_count": c.point_count,
            "unit_count": len(c.units),
            "t": c.t,
            "center": [c.center.x, c.center.y],
        }
        for c in result.clusters
    ]


def build_manifest(algorithm: str, result: Result, params: Any = None,
                   inputs: Optional[Dict[str, str]] = None, timings: Optional[Dict[str, float]] = None,
                   points: Optional[PointSet] = None) -> RunManifest:
    """Manifest for a finished run; ``inputs`` maps a role name to the file it came from"""
    if isinstance(result, ClusterResult):
        params = params if params is not None else result.params
        points = result.points
        noise = result.noise_count
        merged = dict(result.timings)
    else:
        noise = 0
        merged = {}
    merged.update(timings or {})
    return RunManifest(
        algorithm=algorithm,
        params=_jsonable(params) if params is not None else {},
        input_digests={role: file_digest(p) for role, p in (inputs or {}).items()},
        timings=merged,
        n_points=len(result.assignments),
        clusters=cluster_summaries(result, points),
        noise_count=noise,
    )


def save_assignments(labels: Sequence[int], path: str) -> str:
    rows = [ASSIGNMENTS_HEADER]
    rows.extend(f"{i},{int(c)}" for i, c in enumerate(labels))
    _write_text(path, "\n".join(rows) + "\n")
    return path


def save_result(result: Result, directory: str, manifest: Optional[RunManifest] = None) -> Dict[str, str]:
    """Write assignments.csv and manifest.json into directory"""
    assignments_path = save_assignments(result.assignments, os.path.join(directory, ASSIGNMENTS_FILE))

    if manifest is None:
        algorithm = "clarans" if isinstance(result, MedoidSolution) else "scld"
        manifest = build_manifest(algorithm, result)
    manifest_path = os.path.join(directory, MANIFEST_FILE)
    _write_text(manifest_path, json.dumps(manifest.to_dict(), indent=2) + "\n")
    logger.info("Wrote %d assignments to %s", len(result.assignments), directory)
    return {"assignments": assignments_path, "manifest": manifest_path}


def save_report(report: Dict[str, Any], path: str) -> str:
    _write_text(path, json.dumps(report, indent=2) + "\n")
    return path


def load_manifest(directory: str) -> Dict[str, Any]:
    """The manifest.json of a run directory as a plain dict"""
    path = os.path.join(directory, MANIFEST_FILE)
    try:
        manifest = json.loads(_read_text(path))
    except json.JSONDecodeError as e:
        raise ParseError(e.lineno, f"invalid JSON: {e.msg}", path) from e
    if not isinstance(manifest, dict):
        raise ParseError(1, "expected a JSON object", path)
    return manifest


class SceneIO(Service):
    def __init__(self):
        super().__init__()
        self.supported_actions = {
            "load_points": self._load_points,
            "load_obstacles": self._load_obstacles,
            "save_points": self._save_points,
            "save_obstacles": self._save_obstacles,
            "save_result": self._save_result,
            "save_report": self._save_report,
            "load_manifest": self._load_manifest,
            "load_assignments": self._load_assignments,
            "render": self._render,
        }

    @staticmethod
    def _path(data: Dict[str, Any], key: str = "path") -> str:
        path = data.get(key)
        if not path:
            raise InvalidParameter(f"No {key} specified")
        return str(path)

    def _load_points(self, data: Dict[str, Any]) -> PointSet:
        return load_points(self._path(data))

    def _load_obstacles(self, data: Dict[str, Any]) -> ObstacleSet:
        return load_obstacles(self._path(data))

    def _save_points(self, data: Dict[str, Any]) -> str:
        return save_points(data["points"], self._path(data))

    def _save_obstacles(self, data: Dict[str, Any]) -> str:
        return save_obstacles(data["obstacles"], self._path(data))

    def _save_result(self, data: Dict[str, Any]) -> Dict[str, str]:
        return save_result(data["result"], self._path(data, "directory"), data.get("manifest"))

    def _save_report(self, data: Dict[str, Any]) -> str:
        return save_report(data["report"], self._path(data))

    def _load_manifest(self, data: Dict[str, Any]) -> Dict[str, Any]:
        return load_manifest(self._path(data, "directory"))

    def _load_assignments(self, data: Dict[str, Any]) -> List[int]:
        return load_assignments(self._path(data)).tolist()

    def _render(self, data: Dict[str, Any]) -> str:
        return render_svg(
            data["points"],
            self._path(data),
            assignments=data.get("assignments"),
            obstacles=data.get("obstacles"),
            grid=data.get("grid"),
        )

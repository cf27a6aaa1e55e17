"""
Command line entry point
Every step is routed through the Dispatcher as a request to one of the services
"""

import argparse
import json
import logging
import os
import sys
import time
from typing import Any, Dict, List, Optional, Sequence

from ..baseline_clarans import ClaransService
from ..core.dispatcher import Dispatcher
from ..cpo_clusterer import CpoService
from ..geom_core import ObstacleSet
from ..grid_engine import GridConfig, build_grid
from ..scld_clusterer import ScldService
from ..synth_eval import SynthService
from .main import SceneIO, build_manifest, save_assignments

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_VALIDATION = 2

POINTS_FILE = "points.csv"
ALGORITHMS = ("scld", "cpo-wfc", "cpo-wcc", "clarans")


class CommandFailed(Exception):
    def __init__(self, response: Dict[str, Any]):
        super().__init__(response.get("error"))
        self.response = response


def create_dispatcher() -> Dispatcher:
    dispatcher = Dispatcher()
    dispatcher.register_module("scld", ScldService())
    dispatcher.register_module("cpo", CpoService())
    dispatcher.register_module("clarans", ClaransService())
    dispatcher.register_module("synth", SynthService())
    dispatcher.register_module("scene_io", SceneIO())
    return dispatcher


def _call(dispatcher: Dispatcher, module: str, action: str, data: Dict[str, Any]) -> Any:
    response = dispatcher.route_request(dispatcher.create_request(module, action, data))
    if not response["success"]:
        raise CommandFailed(response)
    return response["data"]


def _int_list(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _str_list(text: str) -> List[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spatial-cluster", description="Grid-based spatial clustering with obstacles")
    parser.add_argument("-v", "--verbose", action="store_true", help="log debug output")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a synthetic scene")
    gen.add_argument("--preset", default="ds1_shapes",
                     choices=["ds1_shapes", "ds2_blobs", "obstacle_split", "uniform_noise"])
    gen.add_argument("--n", type=int, required=True, help="number of points")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--noise", type=float, default=0.0, help="fraction of noise points")
    gen.add_argument("--out", required=True, help="points file to write")
    gen.add_argument("--obstacles-out", help="obstacle file (default: next to --out)")
    gen.add_argument("--truth-out", help="write ground-truth labels in assignments format")

    cluster = sub.add_parser("cluster", help="cluster a point file")
    cluster.add_argument("--algo", choices=ALGORITHMS, default="scld")
    cluster.add_argument("--points", required=True)
    cluster.add_argument("--obstacles")
    cluster.add_argument("--m", type=int, default=1024, help="grid cells (perfect square)")
    cluster.add_argument("--h", type=float, default=0.9, help="density proportion")
    cluster.add_argument("--k", type=int, default=5, help="CLARANS cluster count")
    cluster.add_argument("--numlocal", type=int, default=2)
    cluster.add_argument("--maxneighbor", type=int)
    cluster.add_argument("--seed", type=int, default=0)
    cluster.add_argument("--workers", type=int, default=1)
    cluster.add_argument("--marking", choices=["exact", "bisection"], default="exact")
    cluster.add_argument("--out", required=True, help="output directory")

    update = sub.add_parser("update", help="incrementally update an SCLD run")
    update.add_argument("--prev", required=True, help="directory of a previous scld run")
    update.add_argument("--add", help="points file to add")
    update.add_argument("--remove", type=_int_list, default=[], help="comma-separated point ids to remove")
    update.add_argument("--out", required=True, help="output directory")

    bench = sub.add_parser("bench", help="timing sweep")
    bench.add_argument("--algos", type=_str_list, default=["scld"])
    bench.add_argument("--sizes", type=_int_list, required=True)
    bench.add_argument("--repeats", type=int, default=3)
    bench.add_argument("--preset", default="ds1_shapes")
    bench.add_argument("--m", type=int, default=1024)
    bench.add_argument("--h", type=float, default=0.9)
    bench.add_argument("--k", type=int, default=5)
    bench.add_argument("--numlocal", type=int, default=1)
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--out", required=True, help="JSON report file")

    render = sub.add_parser("render", help="draw a scene or clustering as SVG")
    render.add_argument("--points", required=True)
    render.add_argument("--assignments")
    render.add_argument("--obstacles")
    render.add_argument("--grid-m", type=int, help="draw grid lines for this many cells")
    render.add_argument("--out", required=True)
    return parser


def cmd_gen(args: argparse.Namespace, dispatcher: Dispatcher) -> Dict[str, Any]:
    scene = _call(dispatcher, "synth", "generate",
                  {"preset": args.preset, "n": args.n, "seed": args.seed, "noise_fraction": args.noise})
    written = {"points": _call(dispatcher, "scene_io", "save_points", {"points": scene.points, "path": args.out})}
    if scene.obstacles:
        path = args.obstacles_out or os.path.splitext(args.out)[0] + ".obstacles.json"
        written["obstacles"] = _call(dispatcher, "scene_io", "save_obstacles",
                                     {"obstacles": scene.obstacles, "path": path})
    if args.truth_out:
        written["truth"] = save_assignments(scene.truth, args.truth_out)
    return written


def cmd_cluster(args: argparse.Namespace, dispatcher: Dispatcher) -> Dict[str, Any]:
    start = time.perf_counter()
    points = _call(dispatcher, "scene_io", "load_points", {"path": args.points})
    obstacles = ObstacleSet()
    inputs = {"points": args.points}
    if args.obstacles:
        obstacles = _call(dispatcher, "scene_io", "load_obstacles", {"path": args.obstacles})
        inputs["obstacles"] = args.obstacles
    elif args.algo.startswith("cpo"):
        logger.warning("No --obstacles given; %s runs as obstacle-free clustering", args.algo)
    loaded = time.perf_counter()

    params: Dict[str, Any]
    if args.algo == "scld":
        params = {"points": points, "m": args.m, "h": args.h, "workers": args.workers}
        result = _call(dispatcher, "scld", "cluster", params)
    elif args.algo == "cpo-wfc":
        params = {"points": points, "obstacles": obstacles, "m": args.m, "h": args.h,
                  "workers": args.workers, "marking": args.marking}
        result = _call(dispatcher, "cpo", "cluster_wfc", params)
    elif args.algo == "cpo-wcc":
        params = {"points": points, "obstacles": obstacles, "workers": args.workers}
        result = _call(dispatcher, "cpo", "cluster_wcc", params)
    else:
        params = {"points": points, "k": args.k, "numlocal": args.numlocal,
                  "maxneighbor": args.maxneighbor, "seed": args.seed, "workers": args.workers}
        result = _call(dispatcher, "clarans", "cluster", params)
    done = time.perf_counter()

    echo = {k: v for k, v in params.items() if k not in ("points", "obstacles")}
    manifest = build_manifest(args.algo, result, params=echo, inputs=inputs,
                              timings={"load": loaded - start, "run": done - loaded}, points=points)
    _call(dispatcher, "scene_io", "save_points", {"points": points, "path": os.path.join(args.out, POINTS_FILE)})
    paths = _call(dispatcher, "scene_io", "save_result", {"result": result, "directory": args.out, "manifest": manifest})
    return {"clusters": len(manifest.clusters), "noise": manifest.noise_count, **paths}


def cmd_update(args: argparse.Namespace, dispatcher: Dispatcher) -> Dict[str, Any]:
    previous = _call(dispatcher, "scene_io", "load_manifest", {"directory": args.prev})
    if previous.get("algorithm") != "scld":
        raise CommandFailed({"error": "update only supports scld runs", "error_kind": "validation"})

    prev_points_path = os.path.join(args.prev, POINTS_FILE)
    points = _call(dispatcher, "scene_io", "load_points", {"path": prev_points_path})
    p = previous.get("params", {})
    prev_result = _call(dispatcher, "scld", "cluster",
                        {"points": points, "m": p.get("m"), "h": p.get("h", 0.9), "workers": p.get("workers", 1)})
    added = _call(dispatcher, "scene_io", "load_points", {"path": args.add}) if args.add else None
    result = _call(dispatcher, "scld", "update", {"previous": prev_result, "added": added, "removed": args.remove})

    inputs = {"previous": prev_points_path}
    if args.add:
        inputs["added"] = args.add
    echo = {"m": result.params.m, "h": result.params.h, "workers": result.params.workers}
    manifest = build_manifest("scld", result, params=echo, inputs=inputs)
    _call(dispatcher, "scene_io", "save_points", {"points": result.points, "path": os.path.join(args.out, POINTS_FILE)})
    paths = _call(dispatcher, "scene_io", "save_result", {"result": result, "directory": args.out, "manifest": manifest})
    return {"clusters": len(result.clusters), "noise": result.noise_count, **paths}


def cmd_bench(args: argparse.Namespace, dispatcher: Dispatcher) -> Dict[str, Any]:
    unknown = [a for a in args.algos if a not in ALGORITHMS]
    if unknown:
        raise CommandFailed({"error": f"Unknown algorithms: {', '.join(unknown)}", "error_kind": "validation"})
    report = _call(dispatcher, "synth", "bench", {
        "algos": args.algos, "sizes": args.sizes, "repeats": args.repeats, "preset": args.preset,
        "m": args.m, "h": args.h, "k": args.k, "numlocal": args.numlocal, "seed": args.seed,
    })
    _call(dispatcher, "scene_io", "save_report", {"report": report, "path": args.out})
    return {"report": args.out, "algos": list(report)}


def cmd_render(args: argparse.Namespace, dispatcher: Dispatcher) -> Dict[str, Any]:
    points = _call(dispatcher, "scene_io", "load_points", {"path": args.points})
    data: Dict[str, Any] = {"points": points, "path": args.out}
    if args.assignments:
        data["assignments"] = _call(dispatcher, "scene_io", "load_assignments", {"path": args.assignments})
    if args.obstacles:
        data["obstacles"] = _call(dispatcher, "scene_io", "load_obstacles", {"path": args.obstacles})
    if args.grid_m:
        data["grid"] = build_grid(points, GridConfig(m=args.grid_m, require_square=False))
    return {"svg": _call(dispatcher, "scene_io", "render", data)}


COMMANDS = {
    "gen": cmd_gen,
    "cluster": cmd_cluster,
    "update": cmd_update,
    "bench": cmd_bench,
    "render": cmd_render,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    dispatcher = create_dispatcher()
    try:
        summary = COMMANDS[args.command](args, dispatcher)
    except CommandFailed as e:
        kind = e.response.get("error_kind")
        print(f"error: {e.response.get('error')}", file=sys.stderr)
        return EXIT_VALIDATION if kind == "validation" else EXIT_RUNTIME
    except Exception as e:
        logger.exception("Command %s failed", args.command)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    print(json.dumps(summary, indent=2, default=str))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

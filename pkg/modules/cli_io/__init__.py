"""
Scene IO and Command Line Module
"""

from .main import (
    ASSIGNMENTS_FILE,
    ASSIGNMENTS_HEADER,
    MANIFEST_FILE,
    RunManifest,
    SceneIO,
    build_manifest,
    cluster_summaries,
    file_digest,
    load_assignments,
    load_manifest,
    load_obstacles,
    load_points,
    parse_obstacles,
    parse_points,
    save_assignments,
    save_obstacles,
    save_points,
    save_report,
    save_result,
)
from .render import NOISE_COLOR, cluster_color, render_svg

__all__ = [
    'ASSIGNMENTS_FILE', 'ASSIGNMENTS_HEADER', 'MANIFEST_FILE', 'NOISE_COLOR', 'RunManifest', 'SceneIO',
    'build_manifest', 'cluster_color', 'cluster_summaries', 'file_digest', 'load_assignments', 'load_manifest',
    'load_obstacles', 'load_points', 'parse_obstacles', 'parse_points', 'render_svg', 'save_assignments',
    'save_obstacles', 'save_points', 'save_report', 'save_result',
]

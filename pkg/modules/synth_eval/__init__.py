"""
Synthetic Evaluation Module
"""

from .main import (
    PRESETS,
    SCENE_BOUNDS,
    LabeledScene,
    SceneSpec,
    SynthService,
    TimingRow,
    adjusted_rand_index,
    fit_loglog_slope,
    generate,
    make_runner,
    split_counts,
    split_wall,
    timing_sweep,
)

__all__ = [
    'PRESETS', 'SCENE_BOUNDS', 'LabeledScene', 'SceneSpec', 'SynthService', 'TimingRow',
    'adjusted_rand_index', 'fit_loglog_slope', 'generate', 'make_runner', 'split_counts', 'split_wall',
    'timing_sweep',
]

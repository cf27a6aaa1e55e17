"""
SCLD Clusterer Module
"""

from .main import (
    NOISE_ID,
    Candidate,
    Cluster,
    ClusterResult,
    Noise,
    ScldParams,
    ScldService,
    build_assignments,
    extend_clusters,
    extend_regions,
    incremental_update,
    scld,
)

__all__ = [
    'NOISE_ID', 'Candidate', 'Cluster', 'ClusterResult', 'Noise', 'ScldParams', 'ScldService',
    'build_assignments', 'extend_clusters', 'extend_regions', 'incremental_update', 'scld',
]

"""
CLARANS Baseline Module
"""

from .main import (
    DEFAULT_NUMLOCAL,
    MIN_MAXNEIGHBOR,
    ClaransParams,
    ClaransService,
    MedoidSolution,
    clarans,
    square_error,
)

__all__ = [
    'DEFAULT_NUMLOCAL', 'MIN_MAXNEIGHBOR', 'ClaransParams', 'ClaransService', 'MedoidSolution',
    'clarans', 'square_error',
]

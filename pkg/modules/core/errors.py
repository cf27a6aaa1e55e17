"""
Error Types
Exception hierarchy shared by every module
"""

from typing import Optional


class SpatialClusteringError(Exception):
    """Root of every error raised by the package"""

    kind = "runtime"


class ValidationError(SpatialClusteringError):
    """Input rejected before any computation ran"""

    kind = "validation"


class ComputationError(SpatialClusteringError):
    """A well-formed input that could not be processed"""

    kind = "runtime"


# Validation errors

class EmptyPointSet(ValidationError):
    pass


class NonSquareM(ValidationError):
    def __init__(self, m: int):
        super().__init__(f"m must be a perfect square, got {m}")
        self.m = m


class InvalidParameter(ValidationError):
    pass


class EndpointInsideObstacle(ValidationError):
    pass


class KTooLarge(ValidationError):
    def __init__(self, k: int, n: int):
        super().__init__(f"k={k} exceeds the number of points ({n})")
        self.k = k
        self.n = n


class UnknownPointId(ValidationError):
    def __init__(self, point_id: int):
        super().__init__(f"Unknown point id: {point_id}")
        self.point_id = point_id


class LengthMismatch(ValidationError):
    pass


class ParseError(ValidationError):
    def __init__(self, line: int, message: str, path: Optional[str] = None):
        where = f"{path}:{line}" if path else f"line {line}"
        super().__init__(f"{where}: {message}")
        self.line = line
        self.path = path


class EmptyFile(ValidationError):
    pass


class TooFewVertices(ValidationError):
    pass


class DegeneratePolygon(ValidationError):
    pass


class SelfIntersectingPolygon(ValidationError):
    pass


class OverlappingObstacles(ValidationError):
    def __init__(self, first: int, second: int):
        super().__init__(f"Obstacles {first} and {second} intersect")
        self.first = first
        self.second = second


# Runtime errors

class NoPathError(ComputationError):
    pass


class EmptyRegion(ComputationError):
    pass


class CenterUndefined(ComputationError):
    pass


class IoError(ComputationError):
    pass


def error_kind(exc: BaseException) -> str:
    """Classify an exception as 'validation' or 'runtime'"""
    if isinstance(exc, SpatialClusteringError):
        return exc.kind
    return "runtime"

"""
Point Cloud Errors
Exception hierarchy shared by every pointcloud module
"""


class PointCloudError(Exception):
    """Base class for all resampling framework errors"""


class ParseError(PointCloudError, ValueError):
    """Malformed row or non-numeric field in an input file"""

    def __init__(self, message: str, line: int = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EmptyCloud(PointCloudError, ValueError):
    """Input holds no points"""


class DegenerateCloud(PointCloudError, ValueError):
    """Coordinate matrix is all zero"""


class BadParams(PointCloudError, ValueError):
    """Parameter outside its valid range"""


class InvalidRotation(PointCloudError, ValueError):
    """Rotation is not orthonormal with determinant +1"""


class IsolatedNode(PointCloudError, ValueError):
    """Zero-degree node under the strict isolated-node policy"""


class BandwidthTooLarge(PointCloudError, ValueError):
    """Requested bandwidth exceeds the node count"""


class DimensionMismatch(PointCloudError, ValueError):
    """Row count or column count does not match the operator"""


class WrongShiftKind(PointCloudError, ValueError):
    """Operation requires a different graph shift operator"""


class IllConditioned(PointCloudError, ValueError):
    """Linear system too ill-conditioned to solve reliably"""


class InsufficientNeighbors(PointCloudError, ValueError):
    """Neighbourhood too small for a normal estimate"""


class AllZeroFeatures(PointCloudError, ValueError):
    """Every feature row is zero, no distribution can be formed"""


class ZeroSupport(PointCloudError, ValueError):
    """Sampling requested from a distribution with no mass"""


class UnsupportedFeature(PointCloudError, ValueError):
    """Nonzero feature row on a point with zero probability"""


class DegenerateConfiguration(PointCloudError, ValueError):
    """Points are coplanar or collinear for the requested fit"""


class ConvergenceFailure(PointCloudError, RuntimeError):
    """Iterative solver did not reach its tolerance"""

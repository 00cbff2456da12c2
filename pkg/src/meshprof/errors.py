"""Exception types shared across the package."""


class MeshprofError(Exception):
    """Base class for all errors raised by this package."""


class UnsplittableCuboidError(MeshprofError):
    """Raised when a single-cell cuboid is asked to split."""


class OutOfDomainError(MeshprofError):
    """Raised when a point lies outside the grid domain it is used with."""


class MeshFormatError(MeshprofError):
    """Raised on malformed subdivision documents; message names the JSON path."""

    def __init__(self, path: str, reason: str):
        self.path = path
        self.reason = reason
        super().__init__(f"{path}: {reason}")


class ProfileQueryError(MeshprofError):
    """Raised when a blackbox query fails; carries the offending point."""

    def __init__(self, point, reason: str):
        self.point = point
        self.reason = reason
        super().__init__(f"query at {tuple(point.index)} failed: {reason}")


class NonDeterministicProfileError(MeshprofError):
    """Raised when a profile declared pure returns different values for one point."""

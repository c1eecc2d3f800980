"""Exception types shared across the package."""


class CantorScalesError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameterError(CantorScalesError, ValueError):
    """An argument is outside the documented domain of an operation."""


class InvalidSpecError(InvalidParameterError):
    """A serialized gauge / family / product description fails validation."""


class OutOfDepthError(CantorScalesError, ValueError):
    """A radius or level lies outside the resolved depth range of a product."""


class TooLargeError(CantorScalesError, ValueError):
    """A requested computation exceeds the documented size bounds.

    Carries ``usable_depth`` when a partial depth would still succeed.
    """

    def __init__(self, message: str, usable_depth: int | None = None):
        super().__init__(message)
        self.usable_depth = usable_depth


class DominationViolatedError(CantorScalesError, ValueError):
    """The upper gauge fails to dominate the doubled lower gauge."""


class DepthLimitError(CantorScalesError, RuntimeError):
    """Integer enclosures would need precision beyond the configured cap.

    Carries ``usable_depth``: the last level that was completed safely.
    """

    def __init__(self, message: str, usable_depth: int | None = None):
        super().__init__(message)
        self.usable_depth = usable_depth


class UndefinedRatioError(InvalidParameterError):
    """A distortion ratio was requested for a degenerate pair."""

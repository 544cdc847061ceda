"""Exception types raised by psbohm."""


class PSBohmError(ValueError):
    """Base class for all library errors."""


class GridError(PSBohmError):
    """Grid construction or grid-compatibility failure."""


class SupportError(PSBohmError):
    """A sampled function does not decay at the grid boundary."""


class MaskError(PSBohmError):
    """A kernel or node mask removes too much of the relevant data."""

    def __init__(self, message, occupancy=None):
        super().__init__(message)
        self.occupancy = occupancy


class ScopeError(PSBohmError):
    """Input outside the exactly-terminating regime the library supports."""

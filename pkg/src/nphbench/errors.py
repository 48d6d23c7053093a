"""Exception hierarchy.

Everything raised on purpose derives from :class:`NphbenchError` so callers
(most importantly the simulation harness) can separate "this dataset cannot
support this test" from genuine bugs.
"""


class NphbenchError(Exception):
    """Base class for all errors raised by this package."""


class DataFormatError(NphbenchError):
    """Malformed input file (CSV parsing, bad header, bad values)."""


class InvalidDataError(NphbenchError):
    """A dataset violates a structural precondition (e.g. empty group)."""


class NoEventsError(InvalidDataError):
    """No observed events, so no event-time statistic is defined."""


class DegenerateStatisticError(NphbenchError):
    """The requested statistic is undefined on this dataset."""


class DegenerateVarianceError(DegenerateStatisticError):
    """Estimated variance of a weighted log-rank statistic is zero."""


class NoAdmissiblePairsError(DegenerateStatisticError):
    """Sample-space-partition statistic has no usable anchor pairs."""


class Stage2UndefinedError(DegenerateStatisticError):
    """No admissible sign-switch index for the second-stage statistic."""


class CalibrationError(NphbenchError):
    """Censoring-rate calibration cannot reach the requested target."""

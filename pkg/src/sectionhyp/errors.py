"""Exception hierarchy shared by every module."""


class SectionHypError(Exception):
    """Base class for all library errors."""


class DomainError(SectionHypError, ValueError):
    """An argument lies outside the domain of the operation."""


class IndeterminateError(SectionHypError):
    """A float-mode sign fell below the sign threshold.

    ``index`` names the offending chain element (or section degree).
    """

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class ConvergenceError(SectionHypError):
    """An iterative solver hit its iteration cap; ``bracket`` is the last bracket."""

    def __init__(self, message, bracket=None):
        super().__init__(message)
        self.bracket = bracket


class BracketError(SectionHypError):
    """The supplied interval does not bracket a sign change."""


class ConstructionError(SectionHypError):
    pass


class PrecisionError(SectionHypError):
    """A residual check failed; retry with more bits."""

    def __init__(self, message, suggested_bits=None):
        super().__init__(message)
        self.suggested_bits = suggested_bits


class SeedError(SectionHypError):
    pass


class ContractError(SectionHypError):
    pass


class DegenerateError(SectionHypError):
    pass


class TrackingError(SectionHypError):
    def __init__(self, message, last_good_q=None):
        super().__init__(message)
        self.last_good_q = last_good_q


class IncompleteEnumeration(SectionHypError):
    pass

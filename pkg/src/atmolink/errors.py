"""Exception hierarchy shared by the library and the command line tool.

The command line maps these onto stable exit codes: configuration problems
exit with 2, measured-data ingestion problems with 3, and numerical or
statistical failures with 4.
"""


class AtmolinkError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(AtmolinkError):
    """An argument lies outside the mathematical domain of an operation."""


class StatisticsError(AtmolinkError):
    """A statistical object (covariance, density, ensemble) is invalid."""


class DegenerateChannelError(StatisticsError):
    """The channel transmits essentially nothing (extinction underflow)."""


class EmptySelectionError(StatisticsError):
    """A postselection threshold left no transmission events."""


class FitBudgetError(AtmolinkError):
    """The evaluation budget ran out before the fit could complete."""

    def __init__(self, message: str, completed: int = 0, total: int = 0):
        super().__init__(message)
        self.completed = completed
        self.total = total


class ConfigError(AtmolinkError):
    """A run configuration file is malformed or violates an invariant."""


class IngestError(AtmolinkError):
    """A measured-trace file could not be ingested."""

"""
Workbench exceptions
"""
from typing import Optional


class WorkbenchError(Exception):
    """Base class for every error the workbench raises on purpose."""


class MalformedPresentationError(WorkbenchError):
    """A category, diagram or index presentation violates its own definition."""


class OutOfBudgetError(WorkbenchError):
    """A construction left the materialized snapshot (distinct from an absent limit)."""


class IndeterminateError(WorkbenchError):
    """Not enough test data to decide a question."""


class PreconditionError(WorkbenchError):
    """An operation was called on inputs that violate its precondition."""


class MissingLimitError(WorkbenchError):
    """A (co)limit that an operation relies on does not exist in scope."""


class DegreeOutOfRangeError(WorkbenchError):
    """A cohomology degree outside the range a complex was built for."""


class UnknownSuiteError(WorkbenchError):
    """run_suite was asked for a suite it does not know."""


class FixtureHashMismatchError(WorkbenchError):
    """A replayed report no longer matches its fixture or its own body."""


class ConstructionFailedError(WorkbenchError):
    """A stepwise construction could not continue."""

    def __init__(self, message: str, step: Optional[int] = None):
        super().__init__(message if step is None else f"step {step}: {message}")
        self.step = step


class SiteFileError(WorkbenchError):
    """Parse error in the workbench text format."""

    def __init__(self, message: str, line: int, column: int = 1, path: Optional[str] = None):
        where = f"{path}:" if path else ""
        super().__init__(f"{where}{line}:{column}: {message}")
        self.line = line
        self.column = column
        self.path = path


class ViolationError(PreconditionError):
    """The site breaks a property an operation relies on; a finding, not a missing input."""

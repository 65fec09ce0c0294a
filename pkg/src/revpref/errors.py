"""Exception hierarchy shared across the package."""

from __future__ import annotations


class RevprefError(Exception):
    """Base class for all errors raised by revpref."""


# -- dataset validation ---------------------------------------------------


class ValidationError(RevprefError, ValueError):
    """A choice dataset violates one of its structural invariants."""


class MenuTooSmall(ValidationError):
    pass


class ChoiceNotInMenu(ValidationError):
    pass


class DuplicateMenu(ValidationError):
    pass


class UnknownAlternative(ValidationError):
    pass


class BundleSumMismatch(ValidationError):
    pass


# -- analysis ----------------------------------------------------------------


class Irrational(RevprefError):
    """The direct revealed relation has a cycle, so no rational ordering exists."""

    def __init__(self, message: str, cycle: tuple[int, ...] = ()):
        super().__init__(message)
        self.cycle = cycle


class NotRationalizable(RevprefError):
    """Revealed preference was requested for data the model cannot explain."""


class InapplicableModel(RevprefError, ValueError):
    pass


# -- constraint engine -------------------------------------------------------


class BudgetExceeded(RevprefError):
    """The solver ran out of its conflict budget before reaching a verdict."""


class UnknownAtomFamily(RevprefError, ValueError):
    pass


class UnsatisfiableSystem(RevprefError):
    pass


# -- oracle --------------------------------------------------------------------


class UniverseTooLarge(RevprefError, ValueError):
    pass


class SpaceTooLarge(RevprefError, ValueError):
    pass


# -- harness -------------------------------------------------------------------


class ParseError(RevprefError):
    pass


class SchemaError(RevprefError):
    """A pool file parsed but does not match the expected layout.

    ``problems`` collects per-subject validation failures as
    ``(subject_id, message)`` pairs so that a single load reports all of them.
    """

    def __init__(self, message: str, problems: list[tuple[str, str]] | None = None):
        super().__init__(message)
        self.problems = problems or []


class MenuMismatch(RevprefError, ValueError):
    pass


class NoPassingSubjects(RevprefError):
    pass

"""Exception hierarchy for meerr.

Every error raised on purpose by the package derives from :class:`MeerrError`
and from the builtin it refines, so callers may catch either.
"""

from __future__ import annotations

from typing import Sequence


class MeerrError(Exception):
    """Base class for all meerr errors."""


class InvalidSpecError(MeerrError, ValueError):
    """A population spec violates one or more invariants."""

    def __init__(self, violations: Sequence[str]):
        self.violations = tuple(violations)
        super().__init__("invalid population spec: " + "; ".join(self.violations))


class NotPSDError(InvalidSpecError):
    """The synthesized covariance of (Y, X_1..X_p) is not positive semidefinite."""

    def __init__(self, detail: str = "spec not PSD"):
        super().__init__([detail])


class SingularMomentError(MeerrError, ArithmeticError):
    """A moment matrix (A, A* or an estimate of A) cannot be inverted."""


class InvalidEstimatorConfigError(MeerrError, ValueError):
    """An estimator config does not match its member's parameterization."""

    def __init__(self, message: str, field: str | None = None):
        self.field = field
        super().__init__(message)


class EvaluationDomainError(MeerrError, ArithmeticError):
    """An estimator was evaluated outside the domain of its closed form."""

    def __init__(self, member: str, reason: str, variate: int | None = None):
        self.member = member
        self.reason = reason
        self.variate = variate
        where = f" at variate {variate + 1}" if variate is not None else ""
        super().__init__(f"evaluation domain error in {member}{where}: {reason}")


class LognormalMomentError(MeerrError, ValueError):
    """No lognormal law delivers the requested means and covariance."""


class DegenerateSampleError(MeerrError, ValueError):
    """A sample is too small or has a zero-variance column."""


class ConfigError(MeerrError, ValueError):
    """A scenario document failed to parse or validate.

    ``issues`` holds ``(json_path, message)`` pairs, one per problem found.
    """

    def __init__(self, issues: Sequence[tuple[str, str]]):
        self.issues = tuple(issues)
        lines = [f"{path}: {message}" for path, message in self.issues]
        super().__init__("invalid scenario document:\n  " + "\n  ".join(lines))


class ComparisonMismatchError(MeerrError, ValueError):
    """Empirical and theoretical result lists do not line up."""


class InvalidScenarioError(MeerrError, ValueError):
    """A simulation scenario violates its invariants."""

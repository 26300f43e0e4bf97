"""Exception types shared across the package."""


class LatkitError(Exception):
    """Base class for all package errors."""


class LatticeError(LatkitError):
    """Base class for lattice construction and processing errors."""


class LatticeSyntaxError(LatticeError):
    """A lattice file could not be parsed. Carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class LatticeValidationError(LatticeError):
    """A structurally parsed lattice violates one or more invariants."""

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class MissingPosteriorError(LatticeError):
    """An operation that needs arc posteriors got a lattice without them."""


class MissingStreamError(LatkitError):
    """A score combination referenced a stream that is not present."""


class ScorerError(LatkitError):
    """A scorer failed or was driven outside its contract."""


class ExternalScorerError(ScorerError):
    """The external scorer child process failed, died, or replied garbage."""


class RescoreError(LatkitError):
    """Lattice rescoring failed; the cause is chained."""


class NoPathError(LatticeError):
    """A lattice has no complete path from start to end."""

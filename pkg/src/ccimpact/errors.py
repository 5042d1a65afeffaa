"""Exception hierarchy shared across the pipeline."""


class CcimpactError(Exception):
    """Base class for all pipeline errors."""


# --- git access ---

class RepoNotFound(CcimpactError):
    pass


class EmptyRepo(CcimpactError):
    pass


class UnknownCommit(CcimpactError):
    pass


class PathAbsentAtRevision(CcimpactError):
    pass


class NoParent(CcimpactError):
    """Fix commit has no parent to blame against."""


# --- sampling / configuration ---

class InvalidParameter(CcimpactError):
    pass


class InsufficientNonBugCommits(CcimpactError):
    """Fewer non-bug-introducing candidates than requested. Carries the
    survivors so callers can proceed with a smaller baseline."""

    def __init__(self, requested, available):
        super().__init__(
            f"requested {requested} non-bug-introducing commits, only {available} available"
        )
        self.requested = requested
        self.available = available


# --- classification ---

class MalformedResponse(CcimpactError):
    pass


class EndpointUnavailable(CcimpactError):
    pass


class RateLimited(CcimpactError):
    pass


# --- datasets / metrics ---

class ParseError(CcimpactError):
    def __init__(self, line_no, reason):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class LengthMismatch(CcimpactError):
    pass


class EmptyInput(CcimpactError):
    pass


class ZeroCell(CcimpactError):
    pass

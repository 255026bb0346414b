"""Exception types shared across the toolkit.

The CLI maps these onto process exit codes: usage errors are argparse's
standard 2, ResourceLimitError becomes 3, InfeasibleError becomes 4.
"""


class QuipError(Exception):
    """Base class for toolkit errors."""


class ResourceLimitError(QuipError):
    """A computation hit a configured cap (pair budget, degree bound, size)."""

    def __init__(self, message: str, *, limit: str, value=None):
        super().__init__(message)
        self.limit = limit
        self.value = value


class InfeasibleError(QuipError):
    """The instance has no feasible point.

    `detail` carries a machine-readable payload (dict) for the CLI.
    """

    def __init__(self, message: str, detail: dict | None = None):
        super().__init__(message)
        self.detail = detail or {}


class FormatError(QuipError):
    """A file or text payload failed to parse or validate."""


class UnboundedError(QuipError):
    """A transformation needs finite bounds the instance does not provide."""

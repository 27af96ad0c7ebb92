"""Exception types shared across the package."""


class CohbenchError(Exception):
    """Base class for all package errors."""


class InputError(CohbenchError, ValueError):
    """A caller violated an operation's precondition."""


class CapacityError(CohbenchError):
    """An exact method was asked for an instance above its size limit."""


class FormulaParseError(CohbenchError, ValueError):
    """A proposition string does not conform to the clause grammar."""


class ConfigError(CohbenchError):
    """Endpoint or generation configuration is unusable."""


class TransportError(CohbenchError):
    """All retries against a chat endpoint failed.

    Carries the per-attempt log so failures can be diagnosed offline.
    """

    def __init__(self, message, attempts=()):
        super().__init__(message)
        self.attempts = list(attempts)


class UsageError(CohbenchError):
    """Bad command-line arguments or files."""

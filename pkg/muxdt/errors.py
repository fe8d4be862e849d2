# errors.py - Exception hierarchy shared by the library and the CLI


class MuxdtError(Exception):
    """Base class for every error raised by muxdt."""


class InvalidArgumentError(MuxdtError, ValueError):
    """A parameter is outside the domain of the model."""


class BracketError(MuxdtError):
    """The target DTF is not reachable inside the search bracket."""

    def __init__(self, message, target=None, bracket=None, dtf_range=None):
        super().__init__(message)
        self.target = target
        self.bracket = bracket
        self.dtf_range = dtf_range


class ModelError(MuxdtError):
    """The DTF model behaved non-monotonically where monotonicity is required."""


class SelfCheckError(MuxdtError):
    """One or more distribution self-checks failed."""

    def __init__(self, message, failures=()):
        super().__init__(message)
        self.failures = list(failures)

"""Exception types shared across the package."""


class DecoyArenaError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(DecoyArenaError):
    """A config document could not be parsed at all."""


class ValidationError(DecoyArenaError):
    """A config parsed but violates structural rules (dangling refs, duplicates)."""


class SchemaError(DecoyArenaError):
    """A reward structure is malformed: missing/extra actions or bad values.

    ``diagnostics`` lists the individual violations; ``result`` carries the
    raw material that failed validation when one is available (used by the
    reward designer so the raw LLM response is never lost).
    """

    def __init__(self, message, diagnostics=None, result=None):
        super().__init__(message)
        self.diagnostics = list(diagnostics or [])
        self.result = result


class UnknownSubnet(DecoyArenaError):
    """An operation referenced a subnet that does not exist."""


class EmptyNetwork(DecoyArenaError):
    """The network has no real hosts to attack."""


class UnknownAction(DecoyArenaError):
    """A reward lookup used an action name the structure does not define."""


class UnmappedHost(DecoyArenaError):
    """An alert landed on a host with no observation slot (bookkeeping bug)."""


class ShapeMismatch(DecoyArenaError):
    """An array argument has the wrong shape for the network it was given to."""


class NonFiniteLoss(DecoyArenaError):
    """The PPO loss went NaN/inf; the update is aborted with diagnostics attached."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics


class CheckFailed(DecoyArenaError):
    """A gradient check exceeded its tolerance; carries the worst offender."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class ChecksumMismatch(DecoyArenaError):
    """A checkpoint's recorded fixture hashes disagree with the fixtures given."""


class EmptySamples(DecoyArenaError):
    """A distribution estimator was called with no samples."""


class TransportError(DecoyArenaError):
    """The LLM transport failed or returned an unrecognized response shape."""


class ExtractionError(DecoyArenaError):
    """No config block could be extracted from an LLM response.

    The raw response text is preserved on ``raw_response``.
    """

    def __init__(self, message, raw_response=""):
        super().__init__(message)
        self.raw_response = raw_response

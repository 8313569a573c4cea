"""Exception hierarchy shared across the package."""


class AnnochainError(Exception):
    """Base class for all package-specific errors."""


class UnknownUnit(AnnochainError):
    """A tree unit is missing from the vocabulary handed to the vectorizer."""


class ProviderUnavailable(AnnochainError):
    """Embedding provider kept failing after bounded retries."""


class ProviderTimeout(AnnochainError):
    """Language-model provider did not answer within the retry budget."""


class MalformedResponse(AnnochainError):
    """Provider reply could not be parsed, even after a repair retry."""


class UnsupportedFormat(AnnochainError):
    """Audio blob carries a format tag the transcriber does not accept."""


class InvalidMode(AnnochainError):
    """Session mode parameters violate their constraints."""


class SessionClosed(AnnochainError):
    """Mutation attempted on a finalized (or merge-pending) session."""


class OutOfOrderRound(AnnochainError):
    """Submitted round index does not continue the session's round sequence."""


class GatewayFailure(AnnochainError):
    """Gateway pipeline failed; the round is stored and the merge retriable."""


class IncompleteParallelSession(AnnochainError):
    """Finalize requested before every parallel round arrived and merged."""


class SessionNotFinalized(AnnochainError):
    """Metric requested on a session that is still open."""


class SessionStateError(AnnochainError):
    """Operation is not valid in the session's current state."""


class NothingToRead(AnnochainError):
    """Prior annotation requested before any merged round exists."""


class LedgerIncomplete(AnnochainError):
    """Timing ledger is missing events needed to reconstruct durations."""


class MissingReference(AnnochainError):
    """Quality objective evaluated without a ground-truth tree."""


class ZeroTime(AnnochainError):
    """Efficiency requested with non-positive total time."""


class InvalidScenario(AnnochainError):
    """Simulation scenario parameters are out of range."""


class PremiseViolation(AnnochainError):
    """Closed-form time-difference premises do not hold for the scenario."""


class CorruptLog(AnnochainError):
    """Event log line could not be decoded during replay."""

    def __init__(self, line_number: int, message: str = ""):
        self.line_number = line_number
        super().__init__(message or f"corrupt event log at line {line_number}")


class ConfigError(AnnochainError):
    """Service configuration is invalid; the message names the offending key."""

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"config key {key!r}: {message}")

"""Exception hierarchy shared by all dtss modules."""


class DtssError(Exception):
    """Base class for all domain errors raised by this package."""


# --- twin / registry ---

class DuplicateIdError(DtssError):
    pass


class InvalidStateError(DtssError):
    pass


class UnknownEntityError(DtssError):
    pass


# --- relations ---

class InvalidIntervalError(DtssError):
    pass


class OverlappingZonesError(DtssError):
    pass


# --- ingest ---

class MalformedRecordError(DtssError):
    """Record line is not syntactically parseable."""

    def __init__(self, message, line_no=None):
        super().__init__(message)
        self.line_no = line_no


class SchemaViolationError(DtssError):
    """Record parses but violates the observation schema."""


class UnknownSourceError(DtssError):
    pass


class StaleSequenceError(DtssError):
    pass


# --- detectors ---

class UnorderedTrackError(DtssError):
    pass


class UnorderedEventsError(DtssError):
    pass


class TooFewSamplesError(DtssError):
    pass


class WrongKindError(DtssError):
    pass


class InvalidFeatureError(DtssError):
    pass


class EmptyLexiconError(DtssError):
    pass


# --- multi-entity services ---

class UnorderedAlertsError(DtssError):
    pass


class TimeRegressionError(DtssError):
    pass


# --- scenario / assessment ---

class ScenarioParseError(DtssError):
    pass


class ScenarioValidationError(DtssError):
    pass


class UnknownParameterError(DtssError):
    pass


class BudgetExceededError(DtssError):
    pass

"""Exception types raised across the package.

Every error that callers are expected to catch derives from
:class:`YieldfinderError`, so the CLI can map any domain failure to a
single nonzero exit code.
"""

from __future__ import annotations


class YieldfinderError(Exception):
    """Base class for all domain errors."""


class ValidationError(YieldfinderError):
    """A value object was constructed with out-of-range fields."""


# --- ingest ---------------------------------------------------------------


class InvalidBaseUrl(YieldfinderError):
    pass


class NetworkError(YieldfinderError):
    pass


class AuthError(YieldfinderError):
    pass


class RateLimited(YieldfinderError):
    pass


class FixtureMissing(YieldfinderError):
    pass


class MalformedPayload(YieldfinderError):
    pass


class EmptyElementList(YieldfinderError):
    pass


class MissingRequiredField(YieldfinderError):
    def __init__(self, field: str):
        super().__init__(f"missing required field: {field}")
        self.field = field


class NonNumericField(YieldfinderError):
    def __init__(self, field: str, value: object):
        super().__init__(f"field {field!r} is not numeric: {value!r}")
        self.field = field
        self.value = value


class SchemaViolation(YieldfinderError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class EmptyDataset(YieldfinderError):
    pass


# --- finance --------------------------------------------------------------


class NonRepayable(YieldfinderError):
    """Payment does not cover first-month interest, balance never falls."""


class UnknownNeighborhood(YieldfinderError):
    def __init__(self, names: list[str]):
        super().__init__(f"neighborhoods absent from boundaries: {', '.join(names)}")
        self.names = names


# --- modeling -------------------------------------------------------------


class TooFewRows(YieldfinderError):
    pass


class NoUsableRows(YieldfinderError):
    """Every input row was dropped while building the design matrix."""


class RankDeficient(YieldfinderError):
    def __init__(self, columns: list[str]):
        super().__init__(f"collinear columns: {', '.join(columns)}")
        self.columns = columns


class SpecMismatch(YieldfinderError):
    """Prediction input does not match the layout the model was fit on."""


class DimensionMismatch(YieldfinderError):
    pass


# --- evaluation -----------------------------------------------------------


class LengthMismatch(YieldfinderError):
    pass


class NoScorableListings(YieldfinderError):
    """No listing had the complete feature set the model requires."""

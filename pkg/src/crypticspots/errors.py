"""Exception types shared across the pipeline modules."""


class CrypticSpotsError(Exception):
    """Base class for all library errors."""


class ConfigError(CrypticSpotsError):
    """A configuration value is out of range or inconsistent."""


class DecodeError(CrypticSpotsError):
    """An input image could not be decoded."""


class EmptyRegionError(CrypticSpotsError):
    """A ring/wedge region contains no pixel centers at the given grid size."""


class UndefinedSimilarityError(CrypticSpotsError):
    """Similarity of two empty sequences is undefined."""


class DimensionError(CrypticSpotsError):
    """Vector dimensions do not match the expected problem size."""


class StateError(CrypticSpotsError):
    """An operation was called on an object in an invalid state."""


class NormalizationError(CrypticSpotsError):
    """No index satisfies the nonzero guard of the sample normalization."""


class ParseError(CrypticSpotsError):
    """A record file row is malformed. Carries the 1-based line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class RangeError(ParseError):
    """A record field is outside its allowed range."""


class MissingFeatureError(CrypticSpotsError):
    """A record lacks a required feature input. Carries the record id."""

    def __init__(self, record_id: str, message: str = ""):
        super().__init__(message or f"missing feature for record {record_id!r}")
        self.record_id = record_id


class PathError(CrypticSpotsError):
    """A tree path label is malformed or does not resolve to a unit."""


class EmptyUnitError(CrypticSpotsError):
    """The addressed unit has no mapped samples."""

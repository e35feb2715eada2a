"""Exception hierarchy shared across the package.

Three broad families map onto CLI exit codes: configuration problems (exit 2),
data problems (exit 3), and extraction-backend problems (exit 4). Plain OSError
surfaces as exit 5.
"""

from __future__ import annotations


class RedflagError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(RedflagError):
    """The requested run is misconfigured; no data was touched."""


class DataError(RedflagError):
    """Input data violates a contract."""


class BackendError(RedflagError):
    """A feature-extraction backend failed."""


# --- txmodel ---------------------------------------------------------------

class MalformedRow(DataError):
    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class DuplicateId(DataError):
    def __init__(self, txn_id: str):
        super().__init__(f"duplicate txn_id {txn_id!r}")
        self.txn_id = txn_id


class EmptyInput(DataError):
    """An operation that needs at least one element got none."""


class InvalidWindowing(ConfigError):
    """stride_seconds exceeds duration_seconds, leaving coverage gaps."""


# --- synthgen --------------------------------------------------------------

class SpecInfeasible(ConfigError):
    """The fan-out spec cannot be realized against the generator config."""


# --- promptkit -------------------------------------------------------------

class EmptyWindow(DataError):
    """A window with no transactions cannot be rendered or featurized."""


class UnknownFeature(ConfigError):
    def __init__(self, name: str):
        super().__init__(f"unknown feature name {name!r}")
        self.name = name


# --- extract ---------------------------------------------------------------

class TransportError(BackendError):
    """HTTP failure that survived every retry."""


class ReplayMiss(BackendError):
    def __init__(self, window_digest: str):
        super().__init__(f"no replay fixture for window digest {window_digest}")
        self.window_digest = window_digest


class ParseError(BackendError):
    """The completion text could not be parsed into a feature vector."""


class NoJsonFound(ParseError):
    pass


class MissingKey(ParseError):
    def __init__(self, name: str):
        super().__init__(f"missing feature key {name!r}")
        self.name = name


class ExtraKey(ParseError):
    def __init__(self, name: str):
        super().__init__(f"unexpected key {name!r}")
        self.name = name


class NonNumericValue(ParseError):
    def __init__(self, name: str):
        super().__init__(f"value for {name!r} is not a finite number")
        self.name = name


class FractionalCount(ParseError):
    def __init__(self, name: str):
        super().__init__(f"value for {name!r} must be a whole number")
        self.name = name


class ContractViolation(BackendError):
    """Parsed values break a checkable feature invariant."""


# --- model -----------------------------------------------------------------

class SingleClassData(DataError):
    """Training or ranking needs at least one example of each class."""


class NonFiniteFeature(DataError):
    """A feature value is NaN or infinite."""


class DimensionMismatch(DataError):
    def __init__(self, expected: int, got: int):
        super().__init__(f"expected {expected} features, got {got}")
        self.expected = expected
        self.got = got

"""Exception hierarchy shared across the package.

Errors are grouped into three families so the CLI can map any failure onto
its exit-code contract: configuration mistakes (exit 2), bad or inconsistent
data (exit 3), and numerical breakdowns (exit 4).
"""


class VirtdocError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(VirtdocError):
    """Invalid configuration value or argument combination."""


class DataError(VirtdocError):
    """Bad, missing, or inconsistent input data."""


class NumericError(VirtdocError):
    """Numerical failure such as divergence or a degenerate statistic."""


# --- configuration ---------------------------------------------------------

class InvalidConfigError(ConfigError):
    pass


class InvalidCountError(ConfigError):
    pass


# --- dataset / features ----------------------------------------------------

class MissingColumnError(DataError):
    pass


class RowParseError(DataError):
    def __init__(self, row: int, message: str):
        super().__init__(f"row {row}: {message}")
        self.row = row


class EmptyFileError(DataError):
    pass


class FeatureMismatchError(DataError):
    pass


class MissingFeatureError(DataError):
    pass


class TooFewPerClassError(DataError):
    pass


class SingleClassError(DataError):
    pass


class TooFewSamplesError(DataError):
    pass


class LengthMismatchError(DataError):
    pass


# --- sensors ----------------------------------------------------------------

class MalformedFrameError(DataError):
    pass


class OutOfRangeError(DataError):
    pass


class NonPositiveDurationError(DataError):
    pass


class NonPositiveInputError(DataError):
    pass


class ImplausibleProfileError(DataError):
    pass


# --- anamnesis / session ----------------------------------------------------

class WrongInputKindError(DataError):
    pass


class SessionDoneError(DataError):
    pass


class SessionNotDoneError(DataError):
    pass


class SessionNotFoundError(DataError):
    pass


class TooManyRetriesError(DataError):
    """Raised after repeated invalid answers at one stage.

    Carries the session flagged for human handover so callers can persist it.
    """

    def __init__(self, message: str, session=None):
        super().__init__(message)
        self.session = session


# --- model artifact ---------------------------------------------------------

class ArtifactError(DataError):
    pass


# --- numerics ----------------------------------------------------------------

class ZeroVarianceError(NumericError):
    pass


class DimensionMismatchError(DataError):
    pass


class NonFiniteLossError(NumericError):
    pass


class DegenerateClassError(NumericError):
    pass


class DegenerateBaseError(NumericError):
    pass

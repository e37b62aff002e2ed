"""Exception and warning types shared across the package."""


class CausalfsError(Exception):
    """Base class for every error raised by this package."""


# --- panel construction ---

class NoOverlap(CausalfsError):
    """Target and feature dates share no month after shifting."""


class DuplicateDate(CausalfsError):
    """A dated input contains the same month twice."""


class NonContiguous(CausalfsError):
    """Aligned panel dates would contain a gap."""


class InsufficientHistory(CausalfsError):
    """Panel too short for the requested lag order."""


# --- ingestion ---

class BadTransformCode(CausalfsError):
    """Transform code outside the FRED-MD set {1..7}."""


class MalformedCsv(CausalfsError):
    """CSV input does not match the expected layout."""


class DomainError(CausalfsError):
    """Value outside the mathematical domain of a transform."""


class UnknownSeries(CausalfsError):
    """Series present in the data file but missing from the group sidecar."""


class OverlappingRanges(CausalfsError):
    """Crisis calendar ranges overlap."""


class BadRange(CausalfsError):
    """Crisis range with start after end, or unparseable."""


# --- numerics ---

class Underdetermined(CausalfsError):
    """Regression with at least as many columns as rows."""


class DegenerateInput(CausalfsError):
    """Zero-variance input where variation is required."""


class BadK(CausalfsError):
    """More clusters requested than points available."""


# --- selectors ---

class TooManyCovariates(CausalfsError):
    """Covariate count too close to the observation count."""


class NeedEnvironments(CausalfsError):
    """Invariance testing requires at least two environments."""


class NotAcyclic(CausalfsError):
    """Structure learning failed to reach an acyclic solution.

    Carries the best iterate in ``graph`` so callers can inspect it.
    """

    def __init__(self, message, graph=None):
        super().__init__(message)
        self.graph = graph


class BadName(CausalfsError):
    """Unknown variable or selector name."""


# --- backtest / evaluation ---

class BacktestAborted(CausalfsError):
    """A hard data error stopped the expanding window mid-run.

    ``partial`` holds the ledger of the records completed before the abort;
    ``cause`` is the underlying exception.
    """

    def __init__(self, message, partial=None, cause=None):
        super().__init__(message)
        self.partial = partial
        self.cause = cause


class ShapeError(CausalfsError):
    """Vector length does not match the fitted model."""


class WindowTooLong(CausalfsError):
    """Rolling window longer than the record series."""


class Misaligned(CausalfsError):
    """Two dated series do not share the same dates."""


class Insufficient(CausalfsError):
    """Too few observations to compute a metric."""


# --- synthetic lab ---

class GenerationFailed(CausalfsError):
    """Could not produce a stationary process from the spec."""


# --- cli ---

class ConfigError(CausalfsError):
    """Run configuration missing, unreadable, or inconsistent."""


# --- warnings ---

class RankDeficientWarning(UserWarning):
    """Design matrix was rank deficient; minimum-norm solution returned."""


class NotConvergedWarning(UserWarning):
    """Iterative routine hit its iteration cap; best iterate returned."""


class SkippedTestWarning(UserWarning):
    """A conditional independence test was skipped for lack of data."""

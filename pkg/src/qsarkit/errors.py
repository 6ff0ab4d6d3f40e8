"""Exception hierarchy shared by every stage of the toolkit."""


class QSARError(Exception):
    """Base class for all toolkit errors."""


class DomainError(QSARError, ValueError):
    pass


class IngestError(QSARError):
    pass


class PreprocessError(QSARError):
    pass


class SplitError(QSARError):
    pass


class TuneError(SplitError):
    """Raised when no probed dissimilarity reaches the requested test-set size.

    ``best`` holds the split with the largest test set that was found.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class FitError(QSARError):
    pass


class PredictError(QSARError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


class ContributionError(QSARError):
    pass


class SelectError(QSARError):
    pass


class MetricError(QSARError, ValueError):
    pass


class RandomizationError(QSARError):
    pass


class ConfigError(QSARError):
    pass


class StageError(QSARError):
    """Wraps an error raised inside a pipeline stage, keeping the stage label."""

    def __init__(self, stage, cause):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause

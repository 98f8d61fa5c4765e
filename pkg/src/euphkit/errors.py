"""Exception hierarchy shared across the toolkit."""


class EuphkitError(Exception):
    """Base class for all toolkit errors."""


class CorpusError(EuphkitError):
    """Corpus file unreadable, malformed, or empty after normalization."""


class KeywordListError(EuphkitError):
    """Keyword list missing, malformed, or internally inconsistent."""


class BackendError(EuphkitError):
    """Backend construction or scoring failure (incl. out-of-vocabulary)."""


class PipelineError(EuphkitError):
    """A detection/identification stage cannot proceed."""


class ConfigError(EuphkitError):
    """Run configuration is invalid before any stage starts."""


class EvaluationError(EuphkitError):
    """Metric computation rejected its inputs."""

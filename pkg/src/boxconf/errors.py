"""Exception hierarchy.

Everything raised on purpose by this package derives from BoxconfError so
callers (and the CLI) can separate our failures from genuine bugs.
"""


class BoxconfError(Exception):
    """Base class for all boxconf errors."""


# --- answer parsing ---------------------------------------------------------

class NoAnswerError(BoxconfError):
    """Solution text contains no \\boxed{ marker."""


class UnbalancedBracesError(BoxconfError):
    """A \\boxed{ opener has no matching closing brace."""


class EmptyAnswerError(BoxconfError):
    """Answer text is empty (before or after normalization)."""


# --- token alignment --------------------------------------------------------

class EmptySpanError(BoxconfError):
    """No token overlaps the requested character span."""


class TokenTextMismatchError(BoxconfError):
    """Token texts/offsets do not reconstruct the completion text."""


# --- backends ---------------------------------------------------------------

class BackendError(BoxconfError):
    """Base class for inference-backend failures (CLI exit code 2)."""


class HttpError(BackendError):
    """HTTP request failed after the retry budget was exhausted."""


class RequestTimeout(BackendError):
    """HTTP request timed out after the retry budget was exhausted."""


class MissingLogprobsError(BackendError):
    """Provider returned text without per-token logprobs."""


class NoScoringError(BackendError):
    """Backend cannot return logprobs for supplied text (no echo/scoring)."""


class FixtureMissError(BackendError):
    """Mock backend has no record for this request; fixtures must be total."""


class CapabilityError(BoxconfError):
    """The chosen command needs a capability the backend does not declare."""


# --- selection --------------------------------------------------------------

class AllAnswerlessError(BoxconfError):
    """No solution in the sample set produced an extractable answer."""


class NoValidRewardError(BoxconfError):
    """Best-of-N requires at least one valid reward."""


# --- datasets / pipelines ---------------------------------------------------

class DatasetError(BoxconfError):
    """An input file violates its documented schema."""


class DegenerateSeriesError(BoxconfError):
    """Correlation input has fewer than two points or a constant coordinate."""


# --- toy-model dominance checks ---------------------------------------------

class InvalidDistributionError(BoxconfError):
    """A toy model's probabilities do not form valid distributions."""


class MismatchedSupportError(BoxconfError):
    """Two toy models do not share rationale/answer support and gold answer."""


# --- cli --------------------------------------------------------------------

class ConfigError(BoxconfError):
    """Bad config file, unknown key, or unusable flag combination."""

"""Exception hierarchy shared across the package.

Every error raised on purpose derives from JssptError so the CLI can map
failure categories to exit codes without string matching.
"""


class JssptError(Exception):
    """Base class for all deliberate failures."""


class ConfigurationError(JssptError):
    """Invalid generation config, experiment plan, or CLI parameters."""


class DocumentError(JssptError):
    """Schema or invariant violation in a serialized document.

    The message names the offending field.
    """


class ActionError(JssptError):
    """A masked or out-of-range joint action was applied."""


class StateError(JssptError):
    """An operation was requested in the wrong episode phase (e.g. makespan of
    a non-terminal state)."""


class MetricError(JssptError):
    """Domain error in a metric or statistics routine (bad denominator,
    undefined dominance, zero variance, singular design, ...)."""


class ProtocolError(JssptError):
    """The policy wire protocol was violated (malformed reply, stale step,
    out-of-mask decision)."""


class TransportError(JssptError):
    """The external policy channel failed (timeout, closed pipe, dead
    process)."""


class OracleLimitError(JssptError):
    """The exhaustive oracle refused an instance above its search limits."""

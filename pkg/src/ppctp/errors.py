"""Exception hierarchy shared by the library and the CLI.

The CLI maps :class:`ValidationError` to exit code 1 and
:class:`InfeasibleError` to exit code 2.
"""


class CtpError(Exception):
    pass


class ValidationError(CtpError, ValueError):
    """Malformed input: bad parameters, files, or specs."""


class InfeasibleError(CtpError):
    """A well-formed request that cannot be satisfied."""


class ModelInfeasibleError(InfeasibleError):
    pass


class InfeasibleEvaluationError(InfeasibleError):
    pass


class RunawayProgramError(CtpError, RuntimeError):
    """The program exceeded its choice-point budget."""


class NoLatentEntriesError(CtpError, ValueError):
    pass


class DegeneracyError(CtpError, ValueError):
    """Point set too close to cocircular or collinear for the incircle test."""


class GenerationError(InfeasibleError):
    pass


class ZeroMassError(CtpError, ValueError):
    pass


class OracleTooLargeError(CtpError, ValueError):
    pass

"""Exception classes raised by the ``nntuck`` package.

Invariant violations of a fitted model are reported as data by
``nntuck.decomposition.models.validate`` and never raised.
"""


class NNTuckError(Exception):
    """Base class for every error raised by ``nntuck``"""


class ArgumentError(NNTuckError, ValueError):
    """An argument is invalid, e.g. a dimension mismatch or a pair of
    model classes that are not nested"""


class EstimationError(NNTuckError, RuntimeError):
    """The estimation procedure could not produce a model"""


class NumericalError(EstimationError):
    """A non-finite value appeared in the factors or the core

    Parameters
    ----------
    message: str
        The description of the failure
    iteration: int
        The multiplicative iteration at which it was detected
    """
    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration


class ParseError(NNTuckError, ValueError):
    """A dataset file could not be parsed

    Parameters
    ----------
    message: str
        The description of the failure
    path: str (optional)
        The offending file
    line: int (optional)
        The 1-based line number in ``path``
    """
    def __init__(self, message, path=None, line=None):
        location = ''
        if path is not None:
            location = '{}{}: '.format(path, '' if line is None else ':{}'.format(line))
        super().__init__(location + message)
        self.path = path
        self.line = line

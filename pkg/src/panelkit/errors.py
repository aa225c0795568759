"""Exception hierarchy.

Everything derives from ``ValueError`` so callers that only care about
"bad input" can catch one type; the CLI maps ``DataError`` and
``EstimationError`` to exit status 2.
"""


class PanelKitError(ValueError):
    pass


class DataError(PanelKitError):
    """Malformed, missing or inconsistent input data."""


class EstimationError(PanelKitError):
    """A model cannot be estimated on the supplied data."""


class CollinearityError(EstimationError):
    """Design matrix is rank deficient.

    ``culprits`` lists the regressors whose columns lie in the span of the
    remaining design columns.
    """

    def __init__(self, message, culprits=()):
        super().__init__(message)
        self.culprits = tuple(culprits)


class SingularCovarianceError(EstimationError):
    def __init__(self, message, rank):
        super().__init__(message)
        self.rank = rank

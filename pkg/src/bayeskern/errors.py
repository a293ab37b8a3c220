"""Exception hierarchy.

Every error carries a short machine-readable ``code`` which the CLI prints and
maps onto its exit status.
"""


class BayesKernError(Exception):
    code = "ERROR"


class DimensionMismatch(BayesKernError, ValueError):
    code = "DIMENSION_MISMATCH"


class NotPositiveDefinite(BayesKernError, ValueError):
    code = "NOT_POSITIVE_DEFINITE"

    def __init__(self, message, pivot=None):
        super().__init__(message)
        self.pivot = pivot


class SingularMatrix(BayesKernError, ValueError):
    code = "SINGULAR_MATRIX"


class SingularDesign(SingularMatrix):
    code = "SINGULAR_DESIGN"


class NonFiniteObjective(BayesKernError, ValueError):
    code = "NON_FINITE_OBJECTIVE"


class OptimizerDivergence(NonFiniteObjective):
    code = "OPTIMIZER_DIVERGENCE"


class NonFiniteTarget(NonFiniteObjective):
    code = "NON_FINITE_TARGET"


class DomainError(BayesKernError, ValueError):
    code = "DOMAIN_ERROR"


class DegenerateVariance(BayesKernError, ValueError):
    code = "DEGENERATE_VARIANCE"


class NegativeVariance(BayesKernError, ValueError):
    code = "NEGATIVE_VARIANCE"


class InvalidModel(BayesKernError, ValueError):
    code = "INVALID_MODEL"


class NonEquidistantGrid(BayesKernError, ValueError):
    code = "NON_EQUIDISTANT_GRID"


class DuplicateInputs(BayesKernError, ValueError):
    code = "DUPLICATE_INPUTS"


class BadK(BayesKernError, ValueError):
    code = "BAD_K"


class SequenceTooShort(BayesKernError, ValueError):
    code = "SEQUENCE_TOO_SHORT"


class IndexOutOfRange(BayesKernError, IndexError):
    code = "INDEX_OUT_OF_RANGE"


class ParseError(BayesKernError, ValueError):
    code = "PARSE_ERROR"


class EmptyDataset(BayesKernError, ValueError):
    code = "EMPTY_DATASET"


class ConfigError(BayesKernError, ValueError):
    code = "CONFIG_ERROR"

"""Exception types raised across the package.

Every error carries a short machine-readable ``code`` which the CLI prints as
``E:<code>:<message>``. Numerical aborts subclass :class:`NumericalAbort`.
"""


class G3Error(ValueError):
    code = "G3"


class NumericalAbort(G3Error, ArithmeticError):
    code = "NUMERIC"


class InvalidGraph(G3Error):
    code = "INVALID_GRAPH"


class IsolatedNode(G3Error):
    code = "ISOLATED_NODE"


class NotSymmetric(G3Error):
    code = "NOT_SYMMETRIC"


class NegativeTime(G3Error):
    code = "NEGATIVE_TIME"


class DimensionMismatch(G3Error):
    code = "DIMENSION_MISMATCH"


class NegativeEntries(G3Error):
    code = "NEGATIVE_ENTRIES"


class DimensionExceeded(G3Error):
    code = "DIMENSION_EXCEEDED"


class EmptyBatch(G3Error):
    code = "EMPTY_BATCH"


class MixedSizes(G3Error):
    code = "MIXED_SIZES"


class ShapeMismatch(G3Error):
    code = "SHAPE_MISMATCH"


class EmptyDataset(G3Error):
    code = "EMPTY_DATASET"


class EmptySample(G3Error):
    code = "EMPTY_SAMPLE"


class TooFewGraphs(G3Error):
    code = "TOO_FEW_GRAPHS"


class TooLarge(G3Error):
    code = "TOO_LARGE"


class DegenerateConfiguration(G3Error):
    code = "DEGENERATE"


class CheckpointError(G3Error):
    code = "CHECKPOINT"


class ConfigError(G3Error):
    code = "CONFIG"


class NonFiniteLoss(NumericalAbort):
    code = "NON_FINITE_LOSS"


class NonFiniteState(NumericalAbort):
    code = "NON_FINITE_STATE"

"""Exception hierarchy.

Errors fall into two families that the CLI maps to distinct exit codes:
``DataError`` for malformed or inconsistent inputs, ``NumericError`` for
failures inside the numerical kernels or during training.
"""


class GzslError(Exception):
    """Base class for every error raised by this package."""


class DataError(GzslError):
    pass


class NumericError(GzslError):
    pass


# numerics
class NonSquare(NumericError, ValueError):
    pass


class NotSymmetric(NumericError, ValueError):
    pass


class NoConvergence(NumericError):
    pass


class SingularPencil(NumericError):
    pass


class DimensionMismatch(NumericError, ValueError):
    pass


class ZeroVector(NumericError, ValueError):
    pass


class KTooLarge(NumericError, ValueError):
    pass


# autodiff / layers
class NonScalarLoss(NumericError, ValueError):
    pass


class EmptySequence(DataError, ValueError):
    pass


class LabelOutOfRange(DataError, ValueError):
    pass


# training / inference
class EmptyTrainingSet(DataError):
    pass


class NonFiniteLoss(NumericError):
    pass


class EmptyBatch(DataError, ValueError):
    pass


class ModelNotLoaded(DataError):
    pass


# data-io
class MalformedFile(DataError):
    def __init__(self, path, line, message):
        self.path = str(path)
        self.line = line
        super().__init__(f"{path}:{line}: {message}")


class UnknownClassId(DataError):
    pass


class UnseenInTrain(DataError):
    pass


class OutOfRangeAttribute(DataError):
    pass


class MissingClass(DataError):
    pass


class InvalidSpec(DataError, ValueError):
    pass


class EmptySubset(DataError):
    pass

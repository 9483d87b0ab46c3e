"""Exception hierarchy.

Every error carries the name of the module that raised it so the CLI can
report where a failure originated.
"""


class TuringTransformerError(Exception):
    module = "turing_transformer"


# tm-core


class TmError(TuringTransformerError):
    module = "tm"


class ValidationError(TmError):
    """A machine description violates a structural invariant."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class MissingTransition(ValidationError):
    pass


class DuplicateIdentifier(ValidationError):
    pass


class UnknownSymbolInTransition(ValidationError):
    pass


class UnknownStateInTransition(ValidationError):
    pass


class TmSyntaxError(TmError):
    def __init__(self, message, line, column=1):
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {message}")


class SteppedAcceptingState(TmError):
    pass


class EvenWindow(TmError, ValueError):
    pass


# encoder / simulator


class EncodingError(TuringTransformerError):
    module = "encoder"


class UnknownSymbol(EncodingError):
    pass


class AmbiguousArgmax(EncodingError):
    pass


class DimensionMismatch(TuringTransformerError, ValueError):
    module = "transformer"


# multi-round


class InvalidBudget(TuringTransformerError, ValueError):
    module = "rounds"


# bounds


class BoundsError(TuringTransformerError, ValueError):
    module = "bounds"


class NonPositiveSample(BoundsError):
    pass


class InvalidConfidence(BoundsError):
    pass


class DegenerateLipschitz(BoundsError):
    pass


class InvalidRounds(BoundsError):
    pass


class EmptyClass(BoundsError):
    pass


class InvalidSimplexPoint(BoundsError):
    pass


# propagation


class PropagationError(TuringTransformerError, ValueError):
    module = "propagation"


class IndexOutOfRange(PropagationError, IndexError):
    pass


class GammaOutOfRange(PropagationError):
    pass


class ZeroGamma(PropagationError):
    pass


class InvalidLedger(PropagationError):
    pass

"""Exception types shared across the harness.

Names mirror the failure modes surfaced at module boundaries; several
intentionally shadow builtins (SyntaxError, TimeoutError) inside this
package's namespace because they carry extra location/context payload.
"""

from __future__ import annotations


class SpecEvalError(Exception):
    """Base class for all harness errors."""


# ---------------------------------------------------------------- language


class SyntaxError(SpecEvalError):
    def __init__(self, line: int, col: int, message: str):
        super().__init__(f"line {line}, col {col}: {message}")
        self.line = line
        self.col = col
        self.message = message


class UnsupportedFeature(SpecEvalError):
    def __init__(self, feature: str, line: int = 0):
        super().__init__(f"unsupported construct: {feature} (line {line})")
        self.feature = feature
        self.line = line


class ScopeError(SpecEvalError):
    def __init__(self, message: str, line: int = 0):
        super().__init__(f"{message} (line {line})")
        self.line = line


class TypeError_(SpecEvalError):
    """Static type mismatch in the subject language."""

    def __init__(self, message: str, line: int = 0):
        super().__init__(f"{message} (line {line})")
        self.line = line


class UnboundedQuantifier(SpecEvalError):
    def __init__(self, message: str = "quantifier range is not a finite interval", line: int = 0):
        super().__init__(f"{message} (line {line})")
        self.line = line


# ----------------------------------------------------------------- runtime


class ExecutionFault(SpecEvalError):
    """A run of a subject program stopped abnormally."""

    kind = "ExecutionFault"

    def __init__(self, line: int = 0, message: str = ""):
        super().__init__(f"{self.kind} at line {line}" + (f": {message}" if message else ""))
        self.line = line


class StepLimitExceeded(ExecutionFault):
    kind = "StepLimitExceeded"


class DivisionByZero(ExecutionFault):
    kind = "DivisionByZero"


class IndexOutOfBounds(ExecutionFault):
    kind = "IndexOutOfBounds"


class EvaluationError(SpecEvalError):
    """A specification expression itself faulted while being checked."""

    def __init__(self, spec_repr: str, cause: ExecutionFault):
        super().__init__(f"spec {spec_repr!r} faulted: {cause}")
        self.cause = cause


class AnchorMismatch(SpecEvalError):
    pass


# ----------------------------------------------------------------- perturb


class NoEligibleVariable(SpecEvalError):
    pass


class NoEligibleBranch(SpecEvalError):
    pass


class NoEligiblePair(SpecEvalError):
    pass


class NoShufflePossible(SpecEvalError):
    pass


# ----------------------------------------------------------------- taskgen


class UnrefutableMutant(SpecEvalError):
    pass


class NoMaskableNode(SpecEvalError):
    pass


# ----------------------------------------------------------------- modelio


class TransportError(SpecEvalError):
    pass


class AuthError(TransportError):
    pass


class TimeoutError(TransportError):
    pass


# ----------------------------------------------------------------- metrics


class EmptySlice(SpecEvalError):
    pass


# ------------------------------------------------------------------ corpus


class ValidationFailure(SpecEvalError):
    def __init__(self, entry: str, reason: str):
        super().__init__(f"corpus entry {entry!r}: {reason}")
        self.entry = entry
        self.reason = reason


class ManifestMismatch(SpecEvalError):
    pass

"""
Exceptions raised by the normal form pipeline.

Every domain failure derives from GermError and carries a stable
machine-readable ``code`` plus the exit status used by the management
commands. Misuse of the series algebra raises SeriesError, a ValueError.
"""


class GermError(Exception):
    """Base class for pipeline failures."""

    code = 'error'
    exit_status = 1

    def __init__(self, message, stage=None, **details):
        super().__init__(message)
        self.message = message
        self.stage = stage
        self.details = details

    def as_dict(self):
        """Return a JSON-friendly description of the failure."""
        data = {'code': self.code, 'message': self.message}
        if self.stage:
            data['stage'] = self.stage
        if self.details:
            data['details'] = self.details
        return data


# ==========================================
# Input errors (exit status 2)
# ==========================================

class GermSyntaxError(GermError):
    """Expression text that does not parse, with its position."""

    code = 'parse'
    exit_status = 2

    def __init__(self, message, line=None, column=None, **details):
        super().__init__(message, stage='parse', line=line, column=column, **details)
        self.line = line
        self.column = column

    def __str__(self):
        if self.line is None:
            return self.message
        return f"{self.message} (line {self.line}, column {self.column})"


class NonUnitDivisionError(GermSyntaxError):
    pass


class GermFileError(GermError):
    """A germ file with schema violations; ``errors`` lists all of them."""

    code = 'parse'
    exit_status = 2

    def __init__(self, errors):
        self.errors = errors
        summary = '; '.join(f"{field}: {msg}" for field, msg in errors)
        super().__init__(f"invalid germ file: {summary}", stage='parse',
                         errors=[{'field': f, 'message': m} for f, m in errors])


class NotAtOriginError(GermFileError):
    """Components that do not define an origin-fixing germ."""

    code = 'not-at-origin'


# ==========================================
# Germ model errors (exit status 3-5)
# ==========================================

class NotRigidError(GermError):
    code = 'not-rigid'
    exit_status = 3


class NotContractingError(GermError):
    code = 'not-contracting'
    exit_status = 4


class ContractionIndeterminateError(NotContractingError):
    code = 'contraction-indeterminate'


class TruncationTooLowError(GermError):
    """det df vanishes identically on the given terms; more terms are needed."""

    code = 'truncation-too-low'
    exit_status = 4


class NonInjectiveActionError(GermError):
    """det D = 0: the non-injective internal action case is not handled."""

    code = 'non-injective-action'
    exit_status = 5


# ==========================================
# Solver errors (exit status 6)
# ==========================================

class SolverError(GermError):
    code = 'solver'
    exit_status = 6
    subcode = 'solver'

    def as_dict(self):
        data = super().as_dict()
        data['subcode'] = self.subcode
        return data


class SingularSystemError(SolverError):
    subcode = 'singular-system'


class ResonanceMismatch(SingularSystemError):
    """A key classified non-resonant led to a singular block."""

    subcode = 'resonance-mismatch'


class NonConvergenceError(SolverError):
    subcode = 'non-convergence'


class TriangularityError(SolverError):
    subcode = 'not-triangular'


class JordanError(SolverError):
    subcode = 'jordan'


class PreconditionError(SolverError):
    subcode = 'precondition'


class InconsistentSystemError(SolverError):
    subcode = 'inconsistent-system'


class ClassificationError(SolverError):
    subcode = 'classification'


class UnresolvedClassError(GermError):
    code = 'unresolved-class'
    exit_status = 7


# ==========================================
# Series algebra misuse
# ==========================================

class SeriesError(ValueError):
    """Invalid use of the truncated series algebra."""


class DimensionMismatch(SeriesError):
    pass


class ArityError(SeriesError):
    pass


class ConstantTermError(SeriesError):
    pass


class NegativeExponentError(SeriesError):
    pass


class VariableIndexError(SeriesError):
    pass


class SingularLinearPartError(SeriesError):
    pass


class ZeroSeriesError(SeriesError):
    pass


class FactorizationError(SeriesError):
    """A series that is not a monomial times a unit."""

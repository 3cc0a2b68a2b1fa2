"""Exception hierarchy. Every error carries a stable ``code`` string."""


class NLQualError(Exception):
    code = "ERROR"

    def __init__(self, message="", **details):
        super().__init__(message)
        self.details = details

    def to_dict(self):
        return {"code": self.code, "message": str(self), **self.details}


# input errors (CLI exit code 2)
class ParseError(NLQualError):
    code = "PARSE_ERROR"


class SchemaError(NLQualError):
    code = "SCHEMA_ERROR"


class DimMismatch(NLQualError):
    code = "DIM_MISMATCH"


# precondition / evaluation errors (CLI exit code 3)
class EvalError(NLQualError):
    code = "EVAL_ERROR"


class DomainError(NLQualError):
    code = "DOMAIN_ERROR"


class PhiInfinite(NLQualError):
    code = "PHI_INFINITE"


class Unsupported(NLQualError):
    code = "UNSUPPORTED"


class NotACone(NLQualError):
    code = "NOT_A_CONE"


class DimensionTooLarge(NLQualError):
    code = "DIMENSION_TOO_LARGE"


class InfeasiblePoint(NLQualError):
    code = "PRECONDITION_VIOLATED"


class HypothesisViolated(NLQualError):
    code = "HYPOTHESIS_VIOLATED"


class ProjectionFailure(NLQualError):
    code = "PROJECTION_FAILURE"


class PivotLimit(NLQualError):
    code = "PIVOT_LIMIT"


INPUT_ERRORS = (ParseError, SchemaError, DimMismatch)

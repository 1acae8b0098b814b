"""Exception hierarchy shared by all modules."""


class KPPError(Exception):
    """Base class; the CLI maps subclasses of this to exit code 2."""


class SolvabilityViolation(KPPError):
    """Right-hand side has a component along the adjoint eigenfunction."""


class CrossValidationFailure(KPPError):
    """Independent routes to one constant disagree."""


class NonConvergence(KPPError):
    pass


class SingularSystem(KPPError):
    pass


class StabilityBreach(KPPError):
    """Field left [0, 1] beyond round-off."""


class LevelNotBracketed(KPPError):
    pass


class IllConditioned(KPPError):
    pass


class DegenerateSlope(KPPError):
    pass


class DomainError(KPPError):
    """Evaluation outside the stored window or mismatched representations."""


class QuadratureError(KPPError):
    pass

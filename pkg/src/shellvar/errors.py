"""Exception and warning types raised by shellvar."""


class ShellVarError(Exception):
    """Base class for all library errors."""


class DomainError(ShellVarError, ValueError):
    """Invalid parameter domain or incompatible family/domain pair."""


class DomainMismatch(ShellVarError, ValueError):
    """Fields defined on different parameter domains were combined."""


class PoleSingularity(ShellVarError):
    """Evaluation requested at a coordinate pole without pole-tolerant mode."""


class NonOrthogonalChart(ShellVarError):
    """The parametrization is not orthogonal at the evaluation point."""


class GridTooCoarse(ShellVarError, ValueError):
    pass


class EdgeNotBoundary(ShellVarError, ValueError):
    pass


class MissingDerivative(ShellVarError):
    """Exact differentiation was requested but the field carries no exact partial."""


class DegenerateMetric(ShellVarError):
    pass


class DegenerateProfile(ShellVarError, ValueError):
    pass


class StepRejected(ShellVarError):
    pass


class NotConverged(ShellVarError):
    pass


class ConfigError(ShellVarError, ValueError):
    pass


class StepTooLarge(UserWarning):
    pass


class SelfIntersection(UserWarning):
    pass

"""Exception and warning types raised across the package."""


class SindyError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(SindyError, ValueError):
    pass


class DenominatorZero(SindyError, ZeroDivisionError):
    pass


class IntegrationFailure(SindyError, RuntimeError):
    pass


class NonFiniteState(IntegrationFailure):
    pass


class UnknownBenchmark(SindyError, KeyError):
    pass


class MissingParameter(SindyError, KeyError):
    pass


class TooFewSamples(SindyError, ValueError):
    pass


class NonUniformGrid(SindyError, ValueError):
    pass


class EmptyData(SindyError, ValueError):
    pass


class ZeroColumn(SindyError, ValueError):
    pass


class EmptyNullSpace(SindyError):
    pass


class NumericalFailure(SindyError, RuntimeError):
    pass


class DegenerateLambda(SindyError):
    pass


class RankDeficientActiveSet(SindyError):
    pass


class AllTermsEliminated(SindyError):
    pass


class NoValidCandidates(SindyError):
    pass


class EmptyFront(SindyError):
    pass


class NoDenominatorTerms(SindyError):
    pass


class DegreeOverflow(SindyError, ValueError):
    pass


class SimulationDivergence(SindyError):
    pass


class ConfigError(SindyError, ValueError):
    pass


class NoConvergence(UserWarning):
    """Iteration cap reached; the best iterate was returned."""


class NoCliff(UserWarning):
    """No residual cliff on the Pareto front; fell back to minimum residual."""


class ZeroConstantDenominator(UserWarning):
    """Denominator has no constant term; normalized by its lowest-degree term."""


class UnderdeterminedLibrary(UserWarning):
    pass

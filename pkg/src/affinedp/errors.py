"""Exception hierarchy shared by every module of the package."""


class AffineDPError(Exception):
    """Base class for all errors raised by affinedp."""


class ModelError(AffineDPError, ValueError):
    """Input data violates a model invariant."""


class NegativeEntry(ModelError):
    pass


class EmptyControlSet(ModelError):
    pass


class DimensionMismatch(ModelError):
    pass


class NonFiniteEntry(ModelError):
    pass


class IndexOutOfRange(ModelError):
    pass


class InvalidCostVector(ModelError):
    pass


class InfiniteComponent(ModelError):
    pass


class InvalidDistribution(ModelError):
    pass


class NegativeFactor(ModelError):
    pass


class DanglingState(ModelError):
    pass


class InvalidC(ModelError):
    pass


class NonpositiveWeight(ModelError):
    pass


class CapExceeded(AffineDPError):
    """An exhaustive enumeration would exceed the caller's cap."""


class NoneFound(AffineDPError):
    """No contractive policy exists among the enumerated policies."""


class NotContractive(AffineDPError):
    pass


class NotContractiveStart(NotContractive):
    pass


class ImprovedPolicyNotContractive(NotContractive):
    pass


class SingularSystem(AffineDPError):
    pass


class CycleDetected(AffineDPError):
    pass


class Diverged(AffineDPError):
    pass


class NotConverging(AffineDPError):
    pass


class SimplexError(AffineDPError):
    """Numerical breakdown inside the simplex solver."""


class LPNotOptimal(AffineDPError):
    """The linear program has no finite optimum (unbounded or infeasible)."""

    def __init__(self, status):
        super().__init__(f"linear program status: {status}")
        self.status = status

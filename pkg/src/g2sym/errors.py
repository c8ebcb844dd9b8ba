"""Exception types raised across the package."""


class G2SymError(Exception):
    """Base class for package errors."""


class NotPositive(G2SymError, ValueError):
    """A three-form is not of G2 type."""


class DegenerateTriple(G2SymError, ValueError):
    """Three vectors do not span a 3-plane."""


class DegenerateQuadruple(G2SymError, ValueError):
    """Four vectors do not span a 4-plane."""


class InvalidParams(G2SymError, ValueError):
    """Parameters outside the allowed range."""


class OutsideCone(G2SymError, ValueError):
    """A state with non-negative Lambda, where the square root is undefined."""


class SingularOrbitInconsistent(G2SymError, ValueError):
    """Initial-condition data contradict the singular-orbit constraints."""


class IntegrationFailure(G2SymError, RuntimeError):
    """The adaptive integrator could not reach the requested time."""


class OutOfDomain(G2SymError, ValueError):
    """An evaluation point lies outside a solution's interval."""


class NotUnitQuaternion(G2SymError, ValueError):
    """A quaternion argument does not have unit norm."""


class EmptyLevel(G2SymError, ValueError):
    """A requested level lies outside the range of the function."""


class HypothesisFailed(G2SymError, ValueError):
    """A monotonicity hypothesis required by a test does not hold."""


class UnknownCase(G2SymError, ValueError):
    """An unsupported symmetry case was requested."""


class SingularTau(G2SymError, ArithmeticError):
    """The evolving matrix became (numerically) singular."""


class NotCoherent(G2SymError, ValueError):
    """A triple of two-forms violates the coherence conditions."""


class SingularPoint(G2SymError, ValueError):
    """The Killing frame degenerates at the requested point."""


class NonPositiveDet(G2SymError, ValueError):
    """An initial matrix has non-positive determinant."""


class Unclassifiable(G2SymError, ValueError):
    """A traced curve ends where the metric is incomplete."""


class IOFailure(G2SymError, OSError):
    """Output files could not be written."""


# names used in the public interface description
NonUnit = NotUnitQuaternion
InconsistentParams = SingularOrbitInconsistent
StepFailure = IntegrationFailure

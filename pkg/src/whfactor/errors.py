"""Exception and warning classes raised by the factorisation routines."""


class FactorizationError(Exception):
    """Base class for every failure raised by this package."""


class NonDecayingInput(FactorizationError):
    """The function does not vanish at infinity where an L2 object is required."""


class ConvergenceFailure(FactorizationError):
    """The grid does not resolve the function to the requested tolerance."""


class ZeroOnLine(FactorizationError):
    """A symbol that must be nonvanishing on the real line has a (near) zero."""


class AmbiguousIndex(FactorizationError):
    """The winding number could not be determined reliably from the samples."""


class BranchError(FactorizationError):
    """A continuous logarithm or square root could not be tracked along the line."""


class PreconditionViolated(FactorizationError):
    """Inputs fall outside the hypotheses of an estimate or construction."""


class RealAxisSingularity(FactorizationError):
    """A rational function has a zero or pole on (or too close to) the real line."""


class DegreeMismatch(FactorizationError):
    """Numerator and denominator degrees differ where equality is required."""


class PoleEvaluation(FactorizationError):
    """A rational function was evaluated at one of its poles."""


class SpuriousRealPole(FactorizationError):
    """Rational fitting keeps producing a pole on the real line."""


class WindingObstruction(FactorizationError):
    """A winding-number hypothesis of the Daniele-Khrapkov construction fails."""


class GrowthUnsafe(FactorizationError):
    """deg(Delta^2) > 2: the function-theoretic factors grow exponentially."""


class UnsupportedJ(FactorizationError):
    """The operation only covers constant anti-diagonal J."""


class MismatchedJ(FactorizationError):
    """Two Daniele-Khrapkov objects that must share J do not."""


class ZeroEpsilon(FactorizationError):
    """The perturbed branch of the instability example needs epsilon != 0."""


class MaxDegreeReached(UserWarning):
    """Rational fitting hit its degree cap before reaching the tolerance."""

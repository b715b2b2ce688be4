class FieldError(Exception):
    """Base class for every failure raised by the vector-field modules."""


class ZeroParameter(FieldError):
    """The parameter pair is (0, 0) and has no representative on the unit sphere."""


class NotSingular(FieldError):
    """The point handed in is not a zero of the field."""


class Parabolic(FieldError):
    """The point is a multiple zero; eigenvalue and period are undefined."""


class NearParabolic(Parabolic):
    def __init__(self, value: float, threshold: float, quantity: str = "discriminant"):
        self.value = value
        self.threshold = threshold
        self.quantity = quantity
        super().__init__(
            f"|{quantity}| = {value:.3e} is inside the parabolic guard band "
            f"(threshold {threshold:.3e})"
        )


class NotParabolic(FieldError):
    """Sepal zones were requested for a simple point."""


class PoleEvaluation(FieldError):
    """The field was evaluated at the pole w = 0 of the chart at infinity."""


class StepUnderflow(FieldError):
    """The adaptive step collapsed away from any singular point."""


class BisectionStall(FieldError):
    """Boundary bisection could not bracket a periodic/non-periodic transition."""


class NonPlanar(FieldError):
    """Chord tests are only defined for simple (planar) periodgons."""


class InvalidParameter(FieldError, ValueError):
    """An argument is outside the accepted range."""

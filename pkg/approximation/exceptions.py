class KoopmanError(Exception):
    """Base class for every error raised by the approximation package."""


class ConfigurationError(KoopmanError, ValueError):
    """Invalid input supplied by the caller."""


class NumericalFailure(KoopmanError):
    """A computation could not be carried out on otherwise valid input."""


class DomainError(ConfigurationError):
    pass


class ShapeError(ConfigurationError):
    pass


class CapabilityError(ConfigurationError):
    """An operation needs data the object does not carry (gradient, derivatives)."""


class UnknownSystemError(ConfigurationError):
    pass


class ExpressionError(ConfigurationError):
    pass


class OutOfBoxError(NumericalFailure):
    def __init__(self, index, point):
        self.index = index
        self.point = point
        super().__init__(f"Map image of lattice point {index} lies outside the unit box: {point}")


class EscapeError(NumericalFailure):
    def __init__(self, message, step=None):
        self.step = step
        super().__init__(message)


class OutOfHullError(NumericalFailure):
    def __init__(self, index, point, distance):
        self.index = index
        self.point = point
        self.distance = distance
        super().__init__(
            f"Point {index} ({point}) lies outside the image hull of S (distance {distance:.3g})"
        )


class AssignmentError(NumericalFailure):
    pass


class DegenerateSimplexError(NumericalFailure):
    def __init__(self, cell, order, reason):
        self.cell = cell
        self.order = order
        super().__init__(f"Simplex in cell {cell} with axis order {order} is {reason}")


class RankError(NumericalFailure):
    pass

"""Exception types raised across the package."""


class CarnotError(ValueError):
    """Base class for invalid input or violated structural invariants."""


class AntisymmetryViolation(CarnotError):
    pass


class JacobiViolation(CarnotError):
    def __init__(self, triple, error):
        self.triple = tuple(int(i) for i in triple)
        self.error = float(error)
        super().__init__(
            "Jacobi identity fails for basis triple (e_{}, e_{}, e_{}): |error| = {:.3e}".format(
                *(i + 1 for i in self.triple), self.error)
        )


class GradingViolation(CarnotError):
    def __init__(self, message, triple=None, rank_defect=None):
        self.triple = triple
        self.rank_defect = rank_defect
        super().__init__(message)


class NonPositiveLambda(CarnotError):
    pass


class EmptyWindow(CarnotError):
    pass


class BadGrid(CarnotError):
    pass


class ZeroNormal(CarnotError):
    pass


class NonPositiveRadius(CarnotError):
    pass


class DegenerateBall(CarnotError):
    pass


class NotHorizontal(CarnotError):
    pass


class PerturbationTouchesBoundary(CarnotError):
    pass


class ConfigError(CarnotError):
    pass

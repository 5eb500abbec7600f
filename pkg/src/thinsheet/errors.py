"""Exception hierarchy.

Every error raised by the library derives from :class:`ThinSheetError`, and
each one carries the CLI exit code it maps to.
"""


class ThinSheetError(Exception):
    exit_code = 3


class ConfigError(ThinSheetError):
    """Invalid run configuration; ``path`` names the offending field."""

    exit_code = 2

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")


class NumericalError(ThinSheetError):
    exit_code = 3


class InvariantFailure(ThinSheetError):
    exit_code = 1


# symalg
class FrameNotOrthogonal(NumericalError):
    pass


# elastic
class BadModuli(ConfigError):
    def __init__(self, message):
        super().__init__("law.params", message)


class SingularDeformation(NumericalError):
    pass


class HessianNotPSD(NumericalError):
    pass


class StepTooSmall(NumericalError):
    pass


# relax / effective
class SingularAbar(NumericalError):
    pass


class SingularStationaritySystem(NumericalError):
    pass


class SingularL2Star(NumericalError):
    pass


class SingularT2Star(NumericalError):
    pass


# midsurface
class DegenerateSurface(NumericalError):
    pass


class MetricMismatch(NumericalError):
    pass


class InfiniteEnergy(NumericalError):
    """The midsurface is not an isometric immersion of the target metric."""

    def __init__(self, residual, tol):
        self.residual = residual
        self.tol = tol
        super().__init__(f"isometry residual {residual:.3e} exceeds {tol:.1e}; energy is +inf")


# ansatz
class BadTarget(NumericalError):
    pass


class PreconditionII(NumericalError):
    pass


class SingularPrestrain(NumericalError):
    pass


# regimes
class SolverStall(NumericalError):
    pass


class GeometryOverlap(NumericalError):
    pass


class BadExponents(NumericalError):
    pass


class NotCommuting(NumericalError):
    pass

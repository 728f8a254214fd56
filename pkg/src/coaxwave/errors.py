"""Exception hierarchy shared by all modules."""


class CoaxError(Exception):
    """Base class for every error raised by the package."""


# configuration and geometry
class ProfileError(CoaxError):
    pass


class NonMonotoneRadii(ProfileError):
    pass


class OutOfBandMaterial(ProfileError):
    pass


class BadEndpoints(ProfileError):
    pass


class RangeTooSmall(CoaxError):
    pass


# special functions
class DomainError(CoaxError):
    pass


class OverflowRegime(CoaxError):
    pass


class UnsupportedIndex(CoaxError):
    pass


class BelowTurningPoint(CoaxError):
    pass


# determinants
class DegenerateGeometry(CoaxError):
    pass


class DivisionGuard(CoaxError):
    pass


# root finding
class NoSignChange(CoaxError):
    pass


class MultipleSignChanges(CoaxError):
    def __init__(self, msg, brackets=()):
        super().__init__(msg)
        self.brackets = list(brackets)


class MissedRootSuspected(CoaxError):
    pass


# modes
class RankDeficiencySurprise(CoaxError):
    pass


class AxisNormalizationFailed(CoaxError):
    pass


class CutoffCollision(CoaxError):
    pass


class QuadratureDisagreement(CoaxError):
    pass


# discrete oracle and spectra
class GridTooCoarse(CoaxError):
    pass


class LinearizationIllConditioned(CoaxError):
    pass


class ModeTrackingLost(CoaxError):
    pass


class QuadratureUnderResolved(CoaxError):
    pass


class UnknownMode(CoaxError):
    pass

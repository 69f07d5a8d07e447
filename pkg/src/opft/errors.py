"""Exception hierarchy shared by every module of the package."""


class OpftError(Exception):
    """Base class for all library errors."""


class ShapeMismatch(OpftError):
    pass


class SpaceMismatch(OpftError):
    pass


class NotNormalized(OpftError):
    def __init__(self, message, coordinate=None):
        super().__init__(message)
        self.coordinate = coordinate


class NegativeEntry(OpftError):
    def __init__(self, message, coordinate=None):
        super().__init__(message)
        self.coordinate = coordinate


class UnknownVariable(OpftError):
    pass


class ValueOutOfRange(OpftError):
    pass


class SigmaOutOfRange(OpftError):
    pass


class CardinalityMismatch(OpftError):
    pass


class UnliftableComb(OpftError):
    pass


class NotOperationallyEquivalent(OpftError):
    pass


class NotOperationallyTimeSymmetric(OpftError):
    pass


class PremiseFailed(OpftError):
    """An operational equation that should hold does not.

    ``differences`` lists ``(output_assignment, input_assignment, lhs, rhs)``
    tuples for the offending cells.
    """

    def __init__(self, message, differences=()):
        super().__init__(message)
        self.differences = list(differences)


class UnsupportedCombination(OpftError):
    pass


class ClosureExplosion(OpftError):
    pass


class AsymmetricParams(OpftError):
    pass


class ParseError(OpftError):
    pass


class HashMismatch(OpftError):
    pass


class InvalidCertificate(OpftError):
    pass

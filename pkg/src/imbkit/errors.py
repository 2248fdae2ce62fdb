"""Exception and warning types raised across the toolkit."""


class ImbalanceError(ValueError):
    """Base class for every error raised by imbkit."""


# core
class MissingClass(ImbalanceError):
    pass


class FractionOutOfRange(ImbalanceError):
    pass


class LengthMismatch(ImbalanceError):
    pass


class ZeroMean(ImbalanceError):
    pass


class AllDegenerate(ImbalanceError):
    pass


class InvalidDataset(ImbalanceError):
    pass


# learners
class EmptyDataset(ImbalanceError):
    pass


class KTooLarge(ImbalanceError):
    pass


class NonFiniteProb(ImbalanceError):
    pass


class ShapeMismatch(ImbalanceError):
    pass


class DivergedLoss(ImbalanceError, ArithmeticError):
    pass


class SingleClass(ImbalanceError):
    pass


# preprocess
class EmptyClass(ImbalanceError):
    pass


class TooFewMinority(ImbalanceError):
    pass


class NoBoundarySamples(ImbalanceError):
    pass


class TargetExceedsCount(ImbalanceError):
    pass


class UnknownClass(ImbalanceError):
    pass


# inprocess
class AllRoundsRejected(ImbalanceError):
    pass


class TooFewSamples(ImbalanceError):
    pass


# postprocess
class SingleClassLabels(ImbalanceError):
    pass


class ZeroCosts(ImbalanceError):
    pass


# datagen
class InvalidSpec(ImbalanceError):
    pass


class CalibrationFailed(ImbalanceError):
    pass


class MissingColumn(ImbalanceError):
    pass


class EmptyAfterCleaning(ImbalanceError):
    pass


class UnmappableLabel(ImbalanceError):
    pass


# bench
class ConfigError(ImbalanceError):
    pass


class TechniqueFailed(ImbalanceError):
    def __init__(self, error_id, message=""):
        super().__init__(f"{error_id}: {message}" if message else error_id)
        self.error_id = error_id


class DegenerateVariance(UserWarning):
    """A feature is constant within every class; its FDR is infinite."""


class RankDeficient(UserWarning):
    """Fewer than two non-zero principal directions; projection is zero padded."""

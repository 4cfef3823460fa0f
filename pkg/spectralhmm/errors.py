"""
Exception taxonomy. Every domain failure is a ValueError subclass carrying the
CLI exit code it maps to: 2 input/config invalid, 3 insufficient data,
4 numerical degeneracy.
"""

EXIT_INVALID_INPUT = 2
EXIT_INSUFFICIENT_DATA = 3
EXIT_DEGENERATE = 4


class SpectralError(ValueError):
    exit_code = EXIT_INVALID_INPUT


# --- input / configuration (exit 2) ---

class ShapeMismatch(SpectralError):
    pass


class NotStochastic(SpectralError):
    pass


class ZeroPriorEntry(SpectralError):
    pass


class RankDeficient(SpectralError):
    pass


class EmptyCorpus(SpectralError):
    pass


class SymbolOutOfRange(SpectralError):
    pass


class AlphabetMismatch(SpectralError):
    pass


class BasisMismatch(SpectralError):
    pass


class EnumerationTooLarge(SpectralError):
    pass


class SequenceTooLong(SpectralError):
    pass


class KeyMismatch(SpectralError):
    pass


class ConfigError(SpectralError):
    pass


class FormatError(SpectralError):
    pass


class FileUnreadable(SpectralError):
    pass


# --- insufficient data (exit 3) ---

class NoTriples(SpectralError):
    exit_code = EXIT_INSUFFICIENT_DATA


class DivisionByZeroGuard(SpectralError):
    exit_code = EXIT_INSUFFICIENT_DATA


# --- numerical degeneracy (exit 4) ---

class ZeroMatrix(SpectralError):
    exit_code = EXIT_DEGENERATE


class PinvDegenerate(SpectralError):
    exit_code = EXIT_DEGENERATE


class SingularUO(SpectralError):
    exit_code = EXIT_DEGENERATE


class InvalidInit(SpectralError):
    exit_code = EXIT_DEGENERATE


class InvalidState(SpectralError):
    exit_code = EXIT_DEGENERATE


# --- warnings ---

class RankTooLarge(UserWarning):
    """Requested rank exceeds the numerical rank of the moment matrix."""


class NearRankDeficient(UserWarning):
    """HMM passed the rank check but sits close to the tolerance."""

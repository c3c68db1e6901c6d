"""Exception hierarchy. Every class carries the CLI exit code it maps to."""


class BubbleScanError(Exception):
    exit_code = 1


class ParseError(BubbleScanError, ValueError):
    exit_code = 10

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DuplicateDate(ParseError):
    exit_code = 11


class NonPositivePrice(ParseError):
    exit_code = 12


class WindowTooSparse(BubbleScanError):
    exit_code = 13


class SeriesTooShort(BubbleScanError):
    exit_code = 14


class SingularTime(BubbleScanError, ValueError):
    """Model evaluated at (or data placed beyond) the critical time."""

    exit_code = 15


class IllConditioned(BubbleScanError):
    exit_code = 16

    def __init__(self, condition):
        self.condition = condition
        super().__init__(f"linear design is ill-conditioned (condition number {condition:.3g})")


class FitFailed(BubbleScanError):
    exit_code = 17


class NoBubbleSignal(BubbleScanError):
    """No qualified fit: the asset is not diagnosed as a bubble."""

    exit_code = 18


class IndexUndefined(BubbleScanError):
    exit_code = 19


class InvalidRecord(BubbleScanError, ValueError):
    exit_code = 20


class LedgerViolation(BubbleScanError):
    exit_code = 21

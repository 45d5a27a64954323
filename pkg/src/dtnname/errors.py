"""Exception hierarchy for the dtnname package."""


class DtnNameError(Exception):
    """Base class for every error raised by this package."""


# name-specifier parsing

class SpecifierError(DtnNameError, ValueError):
    """Malformed name-specifier text or an invalid av-pair."""

    def __init__(self, message: str, pos: int | None = None):
        if pos is not None:
            message = f"{message} (at offset {pos})"
        super().__init__(message)
        self.pos = pos


class UnbalancedBrackets(SpecifierError):
    pass


class MissingEquals(SpecifierError):
    pass


class EmptyToken(SpecifierError):
    pass


class InvalidToken(SpecifierError):
    pass


class DuplicateSiblingAttribute(SpecifierError):
    pass


class EmptySpecifier(SpecifierError):
    pass


# geography

class InvalidCoordinate(DtnNameError, ValueError):
    pass


# bundles

class BundleError(DtnNameError, ValueError):
    pass


class MalformedLocationSubtree(BundleError):
    pass


class EmptyAfterStrip(BundleError):
    pass


class MalformedHeader(BundleError):
    pass


class BadHexPayload(BundleError):
    pass


class InvalidMetadata(BundleError):
    """MEB field combination violates the routing-state rules."""


# node / routing

class MissingPredicate(DtnNameError):
    pass


class MalformedBeacon(DtnNameError, ValueError):
    pass


# simulator

class EmptyQueue(DtnNameError):
    pass


class UnknownNode(DtnNameError, KeyError):
    def __str__(self) -> str:
        return Exception.__str__(self)


class InvariantViolation(DtnNameError, AssertionError):
    """A runtime check on simulator behaviour failed."""


# scenario files

class ScenarioError(DtnNameError):
    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ScenarioSyntaxError(ScenarioError):
    pass


class UndeclaredNode(ScenarioError):
    pass


class ScenarioCoordinateError(ScenarioError, InvalidCoordinate):
    pass

"""Exception hierarchy shared by the compact engine."""

from __future__ import annotations


class CompactError(Exception):
    """Base class for every error raised by this package."""


# -- front end --------------------------------------------------------------


class ParseError(CompactError):
    def __init__(self, message: str, position=None):
        self.position = position
        where = f"{position}: " if position is not None else ""
        super().__init__(f"{where}{message}")


class IllegalCharacter(ParseError):
    pass


class CompactSyntaxError(ParseError):
    def __init__(self, position, expected: str, found: str):
        self.expected = expected
        self.found = found
        super().__init__(f"expected {expected}, found {found}", position)


class UnknownNormType(ParseError):
    pass


class DuplicateState(ParseError):
    pass


class DuplicateNormName(ParseError):
    pass


class MissingCreatedState(ParseError):
    pass


class UnknownStateName(ParseError):
    pass


class ResolveError(CompactError):
    pass


class UnresolvedNormRef(ResolveError):
    pass


class UnboundTimeVariable(ResolveError):
    pass


class ArityMismatch(ResolveError):
    pass


class CyclicNormReference(ResolveError):
    pass


# -- ledger -----------------------------------------------------------------


class LedgerError(CompactError):
    pass


class DuplicateHistoryId(LedgerError):
    pass


class UnknownHistory(LedgerError):
    pass


class ConflictingAttribute(LedgerError):
    def __init__(self, key: str, old, new):
        self.key = key
        super().__init__(f"attribute {key!r} already bound to {old!r}, got {new!r}")


class DuplicateEventName(LedgerError):
    pass


class NonMonotonicTime(LedgerError):
    pass


class InvalidEvent(LedgerError):
    pass


class CorruptLog(LedgerError):
    def __init__(self, line_no: int, reason: str):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {reason}")


# -- views and backends -----------------------------------------------------


class UnknownNorm(CompactError):
    pass


class UnknownState(CompactError):
    pass


class UnsupportedConstruct(CompactError):
    pass


class ServerUnavailable(CompactError):
    pass


class ServerRejectedDesignDoc(CompactError):
    pass

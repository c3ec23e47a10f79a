"""Exception hierarchy shared by every module.

Each leaf class carries the CLI exit code it maps to, so the command line
never has to keep a separate table in sync.
"""

from __future__ import annotations


class ExMachineError(Exception):
    exit_code = 1


class ParseError(ExMachineError):
    exit_code = 3

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class MalformedLiteral(ParseError):
    pass


class UnknownSymbol(ParseError):
    pass


class UniquenessViolation(ParseError):
    pass


class MachineStuck(ExMachineError):
    exit_code = 4

    def __init__(self, state: int, symbol: str):
        self.state = state
        self.symbol = symbol
        super().__init__(f"no instruction for state {state} scanning {symbol!r}")


class BitsExhausted(ExMachineError):
    exit_code = 5


class StepLimitExceeded(ExMachineError):
    exit_code = 6


class ProtocolError(ExMachineError):
    exit_code = 7


class RemoteUnreachable(ExMachineError):
    exit_code = 8


class MachineError(ExMachineError):
    """Ill-formed program detected at run time (ambiguity, bad state reference)."""

    exit_code = 9


class InstantiationRangeError(MachineError):
    pass


class AmbiguousDispatch(MachineError):
    pass


class OutOfRange(ExMachineError):
    exit_code = 2


class InvalidPrefix(ExMachineError, ValueError):
    exit_code = 2


class NotQFamily(MachineError):
    pass


class UndecidedIndices(ExMachineError):
    """The bounded oracle could not settle some indices."""

    exit_code = 6

    def __init__(self, indices: list[int]):
        self.indices = indices
        super().__init__(f"oracle left indices undecided: {indices}")

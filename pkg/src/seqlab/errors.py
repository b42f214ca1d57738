"""Exception hierarchy shared by every seqlab module."""


class SeqlabError(Exception):
    """Base class for all seqlab errors."""


class ContractError(SeqlabError, ValueError):
    """A caller broke an operation's precondition (shapes, ranges, lengths)."""


class EmptyInputError(ContractError):
    """An operation that needs at least one element received none."""


class DataFormatError(SeqlabError, ValueError):
    """Malformed input data. ``line`` is 1-based when known."""

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


class NumericError(SeqlabError, ArithmeticError):
    """Training produced a non-finite value."""

    def __init__(self, message, epoch=None, index=None):
        self.epoch = epoch
        self.index = index
        super().__init__(f"{message} (epoch={epoch}, sequence={index})")

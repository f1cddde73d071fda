"""
Error vocabulary shared by every layer of the simulator.
Everything raised on purpose derives from EsnChipError so the CLI can
turn it into a one-line message and a nonzero exit code.
"""


class EsnChipError(Exception):
    """Base class for all simulator errors."""


class ContractViolation(EsnChipError, ValueError):
    """A caller broke an operation's precondition (format mismatch, zero LFSR, bad shape)."""


class RejectedInput(EsnChipError, ValueError):
    """A parameter set is outside the modelled hardware's admissible range."""


class UndefinedResult(EsnChipError, ArithmeticError):
    """The requested quantity does not exist for the given data."""


class DatasetError(EsnChipError, ValueError):
    """A dataset file is missing or malformed."""


class ConfigError(EsnChipError, ValueError):
    """An experiment config file or override could not be resolved."""

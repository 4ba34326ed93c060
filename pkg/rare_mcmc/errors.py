from typing import Iterable, List


class RareMCMCError(Exception):
    """Base class for every error raised by the package."""


class DomainError(RareMCMCError, ValueError):
    """A parameter or argument lies outside its domain."""


class ThresholdUnreachableError(RareMCMCError):
    """The conditioning event has probability 0 in floating point."""


class ContractViolationError(RareMCMCError):
    pass


class DegenerateModelError(RareMCMCError):
    pass


class OracleInfeasibleError(RareMCMCError):
    """The requested oracle would be too expensive or is unsupported."""


class ConfigError(RareMCMCError, ValueError):
    """Invalid experiment configuration; keeps every violation found."""

    def __init__(self, violations: Iterable[str]):
        self.violations: List[str] = list(violations)
        super().__init__("; ".join(self.violations) or "invalid configuration")

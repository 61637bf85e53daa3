"""
Exception hierarchy for the double-sweep toolkit
"""

from typing import Iterable


class DoubleSweepError(Exception):
    """Base class for every error raised by the toolkit"""


class InvalidParameterError(DoubleSweepError, ValueError):
    """A parameter or configuration value violates a precondition"""


class UnknownFigureError(DoubleSweepError, LookupError):
    """Requested figure preset does not exist"""

    def __init__(self, name: str, valid: Iterable[str]):
        self.name = name
        self.valid = sorted(valid)
        super().__init__(f"Unknown figure '{name}'. Valid names: {', '.join(self.valid)}")

    def __str__(self) -> str:
        return self.args[0]


class VerificationError(DoubleSweepError):
    """One or more invariant checks failed"""

    def __init__(self, failed: Iterable[str]):
        self.failed = list(failed)
        super().__init__(f"Verification failed: {', '.join(self.failed)}")

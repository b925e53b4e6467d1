# Exception hierarchy shared by every faircut module
from typing import Any, Optional


class FairCutError(Exception):
    exit_code = 1

    def __init__(self, message: str, details: Optional[dict] = None) -> None:
        super().__init__(message)
        self.details = details or {}


class InputError(FairCutError, ValueError):
    """Malformed input, unknown ids or violated preconditions."""


class RefusalError(FairCutError):
    """A configured size bound would be exceeded."""


class InfeasibleError(FairCutError):
    exit_code = 2

    def __init__(self, message: str, certificate: Any = None, details: Optional[dict] = None) -> None:
        super().__init__(message, details)
        self.certificate = certificate


class SolverFailure(FairCutError):
    def __init__(self, message: str, best: Any = None, details: Optional[dict] = None) -> None:
        super().__init__(message, details)
        self.best = best


class UnresolvedError(SolverFailure):
    """The round-or-cut loop hit its iteration cap without a certificate either way."""

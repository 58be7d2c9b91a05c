"""
Shared controller plumbing: command results, exit codes and error documents
"""

from dataclasses import dataclass
from typing import Any, Callable, Dict, Optional

import structlog

from app.core.csh_solver import SolveStatus
from app.core.exceptions import CSHError
from app.models.schemas import ErrorResponse

app_logger = structlog.get_logger(__name__)

EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_CODES = {
    SolveStatus.SOLVED: 0,
    SolveStatus.NO_SOLUTION: 2,
    SolveStatus.INCONCLUSIVE: 3,
}
EXIT_VERIFY_FAILED = 2


@dataclass
class CommandResult:
    exit_code: int
    document: Optional[Dict[str, Any]] = None
    text: Optional[str] = None  # preformatted output (CSV tables)


def failure(exc: CSHError) -> CommandResult:
    document = ErrorResponse(message=exc.message, error_code=exc.error_code, details=exc.details)
    return CommandResult(EXIT_INPUT_ERROR, document.model_dump())


def guarded(command: str, action: Callable[[], CommandResult]) -> CommandResult:
    """Run a command body, turning library errors into an error document."""
    try:
        return action()
    except CSHError as e:
        app_logger.error("command failed", command=command, error_code=e.error_code, message=e.message)
        return failure(e)

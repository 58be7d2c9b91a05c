"""
Error hierarchy shared by the numerical core, services and the CLI.
"""

from typing import Any, Dict, Optional


class CSHError(Exception):
    """Base error; carries a stable code for error documents."""

    error_code = "csh_error"

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}


class GraphValidationError(CSHError):
    error_code = "invalid_graph"


class DisconnectedGraphError(GraphValidationError):
    error_code = "disconnected_graph"


class DomainMismatchError(CSHError):
    error_code = "domain_mismatch"


class NonlinearDomainError(CSHError):
    error_code = "outside_domain"


class UnknownVortexError(CSHError):
    error_code = "unknown_vortex"


class IncompatibleSourceError(CSHError):
    error_code = "incompatible_source"


class InvalidProblemError(CSHError):
    error_code = "invalid_problem"


class InvalidOptionsError(CSHError):
    error_code = "invalid_options"


class RegimeViolationError(CSHError):
    error_code = "regime_violation"


class LinearSolverError(CSHError):
    error_code = "linear_solver_failed"


class CriticalSearchError(CSHError):
    error_code = "critical_search_failed"


class GraphFormatError(CSHError):
    error_code = "malformed_graph_file"


class GraphMismatchError(CSHError):
    error_code = "graph_hash_mismatch"


class RunConfigError(CSHError):
    error_code = "invalid_config"

"""
Pydantic schemas for graph files, run configurations and result documents
"""

from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.core.nonlinear import NonlinearityKind


# Base response model
class BaseResponse(BaseModel):
    success: bool = True
    message: Optional[str] = None
    data: Optional[Any] = None


class ErrorResponse(BaseResponse):
    success: bool = False
    error_code: str
    details: Dict[str, Any] = {}


# Graph file models
class GraphFileVertex(BaseModel):
    model_config = ConfigDict(extra="forbid")

    id: str
    mu: float = Field(1.0, gt=0, allow_inf_nan=False)


class GraphFileEdge(BaseModel):
    model_config = ConfigDict(extra="forbid")

    u: str
    v: str
    w: float = Field(1.0, gt=0, allow_inf_nan=False)


class GraphFile(BaseModel):
    model_config = ConfigDict(extra="forbid")

    vertices: List[GraphFileVertex] = Field(..., min_length=1)
    edges: List[GraphFileEdge] = []


# Run configuration
Command = Literal["solve", "critical", "sweep", "verify", "generate"]
Family = Literal["path", "cycle", "complete", "torus", "random"]


class SolverOptionsModel(BaseModel):
    tol: Optional[float] = Field(None, gt=0)
    max_iter: Optional[int] = Field(None, ge=1)
    shift: Optional[float] = Field(None, gt=0)
    floor: Optional[float] = Field(None, lt=0)


class RunConfig(BaseModel):
    """One CLI invocation, validated per command."""

    command: Command
    graph: Optional[str] = None
    equation: Optional[NonlinearityKind] = None
    lam: Optional[float] = Field(None, gt=0)
    lambda_tol: Optional[float] = Field(None, gt=0)
    lambda_min: Optional[float] = Field(None, gt=0)
    lambda_max: Optional[float] = Field(None, gt=0)
    steps: Optional[int] = Field(None, ge=1)
    geometric: bool = False
    workers: Optional[int] = Field(None, ge=1)
    vortices: List[str] = []
    solver: SolverOptionsModel = SolverOptionsModel()
    output: Optional[str] = None
    result: Optional[str] = None
    family: Optional[Family] = None
    params: List[float] = []
    seed: Optional[int] = None
    random_weights: bool = False
    random_measure: bool = False

    @model_validator(mode="after")
    def check_command(self) -> "RunConfig":
        if self.command in ("solve", "critical", "sweep"):
            if not self.graph:
                raise ValueError(f"{self.command} requires a graph file")
            if self.equation is None:
                raise ValueError(f"{self.command} requires an equation variant")
            if not self.vortices:
                raise ValueError(f"{self.command} requires at least one vortex")
        if self.command == "solve" and self.lam is None:
            raise ValueError("solve requires a lambda")
        if self.command != "solve" and self.lam is not None:
            raise ValueError(f"{self.command} does not take a single lambda")
        if self.command != "critical" and self.lambda_tol is not None:
            raise ValueError("lambda tolerance only applies to critical")
        if self.command == "sweep":
            if self.lambda_min is None or self.lambda_max is None or self.steps is None:
                raise ValueError("sweep requires lambda-min, lambda-max and steps")
            if self.lambda_max < self.lambda_min:
                raise ValueError("sweep lambda-max must not be below lambda-min")
        if self.command == "verify" and not (self.graph and self.result):
            raise ValueError("verify requires a graph file and a result file")
        if self.command == "generate" and self.family is None:
            raise ValueError("generate requires a graph family")
        return self


# Result documents
class TrialItem(BaseModel):
    lam: float
    status: str
    iterations: int
    reason: str
    phase: str
    retried: bool = False


class DiagnosticsData(BaseModel):
    mean: float
    mean_bound: float
    mean_below_bound: bool
    grad_norm: float
    sobolev_norm: float
    grad_ratio: float
    sobolev_ratio: float
    min_u: float
    mean_u: float


class SolveResult(BaseModel):
    graph_sha256: str
    equation: NonlinearityKind
    vortices: List[str]
    status: str
    lam: float = Field(..., serialization_alias="lambda")
    reason: str
    shift: Optional[float] = None
    u: Optional[Dict[str, float]] = None
    iterations: int
    residual_inf: Optional[float] = None
    monotone_violations: int = 0
    trace: List[List[float]] = []
    diagnostics: Optional[DiagnosticsData] = None


class CriticalDocument(BaseModel):
    graph_sha256: str
    equation: NonlinearityKind
    vortices: List[str]
    lambda_c: float
    half_width: float
    bracket: List[float]
    analytic_bound: float
    flagged_inconclusive: bool
    interval_consistent: bool
    family_monotone: Optional[bool] = None
    solution_at_critical: SolveResult
    trials: List[TrialItem] = []


class VerifyReport(BaseModel):
    passed: bool
    graph_sha256: str
    residual_inf: float
    worst_vertex: Optional[str] = None
    negative: bool
    positive_vertex: Optional[str] = None
    dirac_consistent: bool
    max_principle: str
    failures: List[str] = []

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from typing import Dict, List, Literal, Optional


EstimatorName = Literal["mcmc", "is", "mc"]
ESTIMATOR_ORDER = ("mcmc", "is", "mc")


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    model: Literal["fixed", "random"]
    dist: Literal["pareto", "weibull"] = "pareto"
    beta: Optional[float] = Field(None, gt=0)
    shape: Optional[float] = Field(None, gt=0, lt=1)
    scale: float = Field(1.0, gt=0)
    count: Literal["geometric", "poisson", "none"] = "none"
    rho: Optional[float] = Field(None, gt=0, lt=1)
    lam: Optional[float] = Field(None, gt=0)
    a: float = Field(..., ge=0)
    n: Optional[int] = Field(None, ge=1)
    estimators: List[EstimatorName] = ["mcmc", "is", "mc"]
    T: int = Field(..., ge=1)
    batches: int = 25
    burnin: int = Field(0, ge=0)
    seed: int = Field(0, ge=0, lt=2**64)
    is_weight: float = Field(0.5, gt=0, le=1)
    trace_every: int = Field(0, ge=0)
    timing: bool = True
    threads: Optional[int] = Field(None, ge=1)
    label: Optional[str] = None

    @field_validator("estimators", mode="before")
    @classmethod
    def split_estimators(cls, value):
        if isinstance(value, str):
            value = [part.strip() for part in value.split(",") if part.strip()]
        return value

    @field_validator("estimators")
    @classmethod
    def ordered_unique(cls, value: List[str]) -> List[str]:
        if not value:
            raise ValueError("at least one estimator is required")
        return [name for name in ESTIMATOR_ORDER if name in value]

    @field_validator("batches")
    @classmethod
    def enough_batches(cls, value: int) -> int:
        if value < 2:
            raise ValueError("batches must be ≥ 2")
        return value

    @model_validator(mode="after")
    def check_model_fields(self) -> "ExperimentConfig":
        problems = []
        if self.dist == "pareto" and self.beta is None:
            problems.append("beta is required for dist=pareto")
        if self.dist == "weibull" and self.shape is None:
            problems.append("shape is required for dist=weibull")
        if self.model == "fixed":
            if self.n is None:
                problems.append("n is required for model=fixed")
            if self.count != "none":
                problems.append("count must be 'none' for model=fixed")
        else:
            if self.count == "none":
                problems.append("count must be geometric or poisson for model=random")
            if self.count == "geometric" and self.rho is None:
                problems.append("rho is required for count=geometric")
            if self.count == "poisson" and self.lam is None:
                problems.append("lam is required for count=poisson")
        if problems:
            raise ValueError("; ".join(problems))
        return self

    @property
    def threshold(self) -> float:
        """Resolved level: a*n (fixed), a/rho (geometric), a*lam (Poisson)."""
        if self.model == "fixed":
            return self.a * self.n
        if self.count == "geometric":
            return self.a / self.rho
        return self.a * self.lam


class BatchReport(BaseModel):
    estimator: EstimatorName
    batch_means: List[float]
    avg_est: float
    std_dev: float = Field(..., ge=0)
    avg_runtime_s: float
    hit_rate: float
    batches: int
    T: int
    draws_per_batch: int


class TraceRow(BaseModel):
    step: int
    estimate: float
    estimator: EstimatorName


class ExperimentResult(BaseModel):
    config: ExperimentConfig
    threshold: float
    p_max: float
    reports: Dict[str, BatchReport] = {}
    errors: Dict[str, str] = {}
    trace: List[TraceRow] = []


class OracleResult(BaseModel):
    value: float
    abs_error_bound: float = Field(..., ge=0)
    method: Literal["quadrature", "rejection", "closed_form"]


class ProbePoint(BaseModel):
    a: float
    value: Optional[float] = None  # None: hit rate was 0, probe undefined
    hit_rate: float

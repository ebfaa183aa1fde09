import math
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from typing import List, Literal, Optional
from enum import Enum

from magicsparse.core.config import settings

SEED_MAX = (1 << 64) - 1


class SamplingMode(str, Enum):
    IID = "iid"
    CORRELATED = "correlated"
    EXACT_FULL = "exact_full"


class CheckStatus(str, Enum):
    PASS = "PASS"
    FAIL = "FAIL"
    VACUOUS = "VACUOUS"
    SKIPPED = "SKIPPED"


class TermRecord(BaseModel):
    model_config = ConfigDict(extra="forbid")

    bits: str = Field(pattern=r"^[01]+$")
    re: float
    im: float


class DecompositionFile(BaseModel):
    """On-disk JSON layout of a SparseDecomposition."""
    model_config = ConfigDict(extra="forbid")

    t: int = Field(ge=1)
    phi: float
    mode: SamplingMode
    delta: float
    gamma: float
    k: int = Field(ge=1)
    l1: float
    seed: str = Field(pattern=r"^[0-9]+$")
    group_size: int = Field(ge=1)
    terms: List[TermRecord]

    @field_validator("seed")
    @classmethod
    def seed_fits_64_bits(cls, value: str) -> str:
        if int(value) > SEED_MAX:
            raise ValueError("seed exceeds 64 bits")
        return value


class SamplerConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    phi: float = Field(default=math.pi / 4, gt=0.0, lt=math.pi / 2)
    t: int = Field(ge=1)
    delta: float = Field(gt=0.0, lt=1.0)
    mode: SamplingMode = SamplingMode.IID
    seed: int = Field(default=0, ge=0, le=SEED_MAX)
    postselect: bool = False
    postselect_factor: float = Field(default=settings.POSTSELECT_FACTOR, gt=0.0)
    max_attempts: int = Field(default=settings.POSTSELECT_MAX_ATTEMPTS, ge=1)

    @field_validator("mode")
    @classmethod
    def sampling_modes_only(cls, value: SamplingMode) -> SamplingMode:
        if value == SamplingMode.EXACT_FULL:
            raise ValueError("exact_full is a fixture, not a sampling mode")
        return value


class NormEstimate(BaseModel):
    value: float = Field(ge=0.0)
    samples: int = 0
    method: Literal["exact", "fastnorm"]
    epsilon: float = 0.0
    pfail: float = 0.0
    estimator: Literal["exact", "mean", "median_of_means"] = "exact"
    backend: Optional[str] = None
    overlap_evaluations: int = 0


class RunReport(BaseModel):
    t: int
    delta: float
    mode: SamplingMode
    phi: float
    runs: int = Field(ge=1)
    k: int
    gamma: float
    mean_sq_error: float
    stderr: Optional[float] = None
    mean_norm_gap: float
    norm_gap_stderr: Optional[float] = None
    mean_target_overlap: float
    target_overlap_stderr: Optional[float] = None
    implied_gamma: float
    claimed_bound: float
    claim_status: CheckStatus = CheckStatus.SKIPPED
    expected_norm: Optional[float] = None
    oracle_status: CheckStatus = CheckStatus.SKIPPED
    tail_fraction: float = Field(ge=0.0, le=1.0)
    tail_bound_value: float
    tail_status: CheckStatus = CheckStatus.SKIPPED
    warnings: List[str] = []
    notes: List[str] = []

    def assertion_failed(self) -> bool:
        """True when a check that must hold (not a reported claim line) failed."""
        if self.oracle_status == CheckStatus.FAIL or self.tail_status == CheckStatus.FAIL:
            return True
        return self.mode == SamplingMode.IID and self.claim_status == CheckStatus.FAIL


class BenchConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    t_min: int = Field(ge=1)
    t_max: int = Field(ge=1)
    delta: float = Field(default=0.1, gt=0.0, lt=1.0)
    runs: int = Field(default=10, ge=1)
    L: int = Field(default=settings.BENCH_DEFAULT_L, ge=1)
    seed: int = Field(default=0, ge=0, le=SEED_MAX)
    warmup: int = Field(default=1, ge=0)

    @model_validator(mode="after")
    def ordered_range(self) -> "BenchConfig":
        if self.t_min > self.t_max:
            raise ValueError(f"t_min ({self.t_min}) must not exceed t_max ({self.t_max})")
        return self


class BenchRecord(BaseModel):
    t: int
    mode: SamplingMode
    k: int
    run_index: int
    runtime_seconds: float = Field(gt=0.0)
    overlap_evaluations: int


class BenchAggregate(BaseModel):
    t: int
    mode: SamplingMode
    k: int
    runtime_max_seconds: float


class BenchDifference(BaseModel):
    t: int
    runtime_diff_seconds: float


class BenchError(BaseModel):
    t: int
    mode: SamplingMode
    message: str


class BenchResult(BaseModel):
    config: BenchConfig
    records: List[BenchRecord] = []
    aggregates: List[BenchAggregate] = []
    differences: List[BenchDifference] = []
    errors: List[BenchError] = []

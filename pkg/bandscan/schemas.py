from typing import Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

from bandscan import config

SCHEMA_VERSION = "1.0"


class AnalysisConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    B: Union[int, Literal["auto"]] = 10
    tapers: Optional[Union[int, Literal["auto"]]] = None
    bw: Optional[float] = Field(default=0.05, gt=0.0, lt=0.5)
    alpha: float = Field(default=0.05, gt=0.0, lt=1.0)
    n_max: int = Field(default=30, ge=1)
    d0: int = Field(default=config.DEFAULT_D0, ge=1000)
    rtest: int = Field(default=4, ge=2)
    seed: int = Field(default=0, ge=0)
    block_diagonal: bool = True
    decimate: int = Field(default=1, ge=1)
    anti_alias: bool = False
    center: bool = False
    frequency_coupling: Literal["diagonal", "full"] = "diagonal"
    cross_term: Literal["printed", "symmetric"] = "printed"
    stationarity: bool = True
    channels: Optional[List[str]] = None
    sample_rate_hz: Optional[float] = Field(default=None, gt=0.0)

    @model_validator(mode="after")
    def check_tapers_or_bandwidth(self):
        if isinstance(self.B, int) and self.B < 1:
            raise ValueError("B must be a positive integer or 'auto'")
        if isinstance(self.tapers, int) and self.tapers < 1:
            raise ValueError("tapers must be a positive integer or 'auto'")
        explicit = self.model_fields_set
        if self.tapers is not None and "bw" in explicit and self.bw is not None:
            raise ValueError("give either tapers or bw, not both")
        if self.tapers is not None:
            self.bw = None
        elif self.bw is None:
            raise ValueError("one of tapers or bw is required")
        return self


# ============= REPORT =============

class DataSummary(BaseModel):
    T: int
    R: int
    effective_T: int
    truncated: int
    decimate: int
    sample_rate_hz: Optional[float] = None
    channels: List[str]
    B: int
    T_B: int
    N_B: int
    K: int
    bandwidth: float
    test_grid: List[int]


class PartitionRecord(BaseModel):
    p_hat: int
    cuts: List[float]
    cuts_hz: Optional[List[float]] = None


class PassRecord(BaseModel):
    model_config = ConfigDict(from_attributes=True)

    k0: int
    omega0: float
    widths: List[int]
    targets: List[float]
    statistics: List[float]
    pvalues: List[float]
    rejected: List[float]
    action: Literal["cut", "advance"]
    cut: Optional[float] = None


class TraceRecord(BaseModel):
    model_config = ConfigDict(from_attributes=True)

    epsilon: float
    passes: List[PassRecord]
    note: Optional[str] = None


class StationarityRecord(BaseModel):
    model_config = ConfigDict(from_attributes=True)

    omega1: float
    omega2: float
    Q0: float
    scaled_statistic: float
    p_value: float
    reject: bool
    alpha: float
    n_frequencies: int
    null_frequencies: int
    band_hz: Optional[List[float]] = None


class AnalysisReport(BaseModel):
    schema_version: str = SCHEMA_VERSION
    config: AnalysisConfig
    data: DataSummary
    partition: PartitionRecord
    trace: TraceRecord
    stationarity: List[StationarityRecord]
    notes: List[str] = []
    timings: Optional[Dict[str, float]] = None


# ============= REQUESTS / SUMMARIES =============

class SimulateRequest(BaseModel):
    setting: Literal["white-noise", "linear", "sinusoidal", "two-band"] = "white-noise"
    T: int = Field(default=1000, ge=2)
    R: int = Field(default=5, ge=2)
    seed: int = Field(default=0, ge=0)


class EvaluateRequest(BaseModel):
    report: AnalysisReport
    truth_cuts: List[float] = []


class EvaluationSummary(BaseModel):
    rand_index: float
    p_hat: int
    truth_p_hat: int
    cuts: List[float]
    truth_cuts: List[float]
    N_B: int

"""Pydantic request/response models for the HTTP service.

Request models reject unknown fields so that a typo in a config file fails
validation instead of silently running with defaults.
"""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ErrorBody(BaseModel):
    kind: str  # "config" | "data" | "evaluation"
    message: str


class ParseRequest(StrictModel):
    text: str


class ParseResponse(BaseModel):
    canonical_text: str
    return_type: str
    param_types: list[str]
    node_count: int


class EvaluateRequest(StrictModel):
    text: str
    args: list[float] = Field(default_factory=list)
    count: int = 1
    seed: int = 0
    max_steps: int = 10_000
    max_recursion: int = 50


class EvaluateResponse(BaseModel):
    values: list[float]


class GrammarOptions(StrictModel):
    exclude: str | None = None
    pseudocount: float = 1.0
    alpha: float = 1.0
    beta: float = 1.0
    max_depth: int = 12
    extended_primitives: bool = False
    corpus_dir: str | None = None


class SampleProgramsRequest(StrictModel):
    param_types: list[str] = Field(default_factory=list)
    return_type: str = "real"
    count: int = 1
    seed: int = 0
    grammar: GrammarOptions = Field(default_factory=GrammarOptions)


class SampledProgram(BaseModel):
    text: str
    log_prior: float


class SampleProgramsResponse(BaseModel):
    programs: list[SampledProgram]


class ScoreRequest(StrictModel):
    text: str
    grammar: GrammarOptions = Field(default_factory=GrammarOptions)


class ScoreResponse(BaseModel):
    log_prior: float


class MomentsRequest(StrictModel):
    values: list[float]


class MomentsResponse(BaseModel):
    mean: float
    variance: float
    skewness: float
    excess_kurtosis: float


class GTestRequest(StrictModel):
    values: list[float]
    theta: float


class PValueResponse(BaseModel):
    p_value: float


class KsTwoSampleRequest(StrictModel):
    a: list[float]
    b: list[float]


class KsResponse(BaseModel):
    d: float
    p_value: float


class Chi2CdfRequest(StrictModel):
    x: float
    k: int


class Chi2CdfResponse(BaseModel):
    cdf: float


class ExperimentRequest(StrictModel):
    """Mirror of the experiment config; unset fields take the library defaults."""

    task: str
    seed: int = 0
    out_dir: str = "synth-out"
    chains: int = 20
    iterations: int = 50_000
    temperature: float = 1.0
    target: str = ""
    n_settings: int = 5
    samples_per_setting: int = 0
    sigma: float = 0.1
    held_out: list[list[float]] = Field(default_factory=list)
    held_out_count: int = 1
    holdout_samples: int = 1000
    data_path: str = ""
    model: str = "beta-binomial"
    posterior_draws: int = 5000
    pseudocount: float = 1.0
    alpha: float = 1.0
    beta: float = 1.0
    max_depth: int = 12
    extended_primitives: bool = False
    corpus_dir: str = ""
    max_steps: int = 2000
    max_recursion: int = 50
    count: int = 6
    bins: int = 40
    hist_samples: int = 10_000
    workers: int = 0


class ExperimentResponse(BaseModel):
    report: dict
    report_path: str

"""Request/response models for the HTTP service.

Paths in requests are interpreted on the machine the service runs on;
with the default in-process transport used by the command-line client
that is the caller's own filesystem.
"""

from __future__ import annotations

from pydantic import BaseModel, Field

from .svm import DEFAULT_C, DEFAULT_GAMMA


class HealthResponse(BaseModel):
    status: str = "ok"
    version: str


class ErrorResponse(BaseModel):
    kind: str
    error: str


class CheckRequest(BaseModel):
    data_root: str


class CheckResponse(BaseModel):
    classes: dict[int, int]  # class id -> sample count
    total: int
    size_histogram: dict[str, int]
    imbalance_ratio: float


class FeaturesRequest(BaseModel):
    data_root: str
    pipeline: str = "HOG"
    seed: int = 0
    out_path: str
    roi_crop: bool = False


class FeaturesResponse(BaseModel):
    train_path: str
    val_path: str
    test_path: str
    dim: int
    train_count: int
    val_count: int
    test_count: int
    seconds: float


class TrainRequest(BaseModel):
    train_cache: str
    c: float = Field(default=DEFAULT_C, gt=0)
    gamma: float = Field(default=DEFAULT_GAMMA, gt=0)
    out_model: str


class PairSummaryModel(BaseModel):
    class_a: int
    class_b: int
    sv_count: int
    converged: bool


class TrainResponse(BaseModel):
    model_path: str
    classes: list[int]
    pair_count: int
    pairs: list[PairSummaryModel]
    seconds: float


class EvalRequest(BaseModel):
    model: str
    cache: str
    format: str = "md"
    split: str | None = None  # inferred from the cache suffix when omitted
    out: str | None = None


class ScoresModel(BaseModel):
    pipeline: str
    split: str
    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float


class EvalResponse(BaseModel):
    scores: ScoresModel
    rendered: str
    written_to: str | None
    seconds: float


class BenchRequest(BaseModel):
    data_root: str
    seed: int = 0
    out_dir: str
    roi_crop: bool = False


class TimingModel(BaseModel):
    pipeline: str
    preprocess_seconds: float
    train_seconds: float
    eval_seconds: float


class FailureModel(BaseModel):
    pipeline: str
    error: str


class BenchResponse(BaseModel):
    rows: list[ScoresModel]  # one per (pipeline, split)
    timings: list[TimingModel]
    failures: list[FailureModel]
    files: list[str]


class TuneRequest(BaseModel):
    train_cache: str
    seed: int = 0
    out: str | None = None


class CandidateModel(BaseModel):
    stage: int
    c: float
    gamma: float
    score: float


class TuneResponse(BaseModel):
    c: float
    gamma: float
    candidates: list[CandidateModel]
    written_to: str | None
    seconds: float

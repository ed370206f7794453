"""HTTP facade over the workflows.

Endpoints are synchronous (FastAPI runs them on its worker threadpool)
because training and benchmarking are long CPU-bound jobs.  Domain
errors (bad paths, malformed files, invalid parameters) come back as
HTTP 400 with the exception class name; anything else is a genuine 500.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from . import __version__, workflows
from .metrics import EvalReport
from .pipeline import pipeline_from_name
from .schemas import (
    BenchRequest,
    BenchResponse,
    CandidateModel,
    CheckRequest,
    CheckResponse,
    ErrorResponse,
    EvalRequest,
    EvalResponse,
    FailureModel,
    FeaturesRequest,
    FeaturesResponse,
    HealthResponse,
    PairSummaryModel,
    ScoresModel,
    TimingModel,
    TrainRequest,
    TrainResponse,
    TuneRequest,
    TuneResponse,
)

app = FastAPI(title="tsrbench", version=__version__)


@app.exception_handler(ValueError)
def _domain_error(_request: Request, exc: ValueError) -> JSONResponse:
    payload = ErrorResponse(kind=type(exc).__name__, error=str(exc))
    return JSONResponse(status_code=400, content=payload.model_dump())


@app.exception_handler(OSError)
def _io_error(_request: Request, exc: OSError) -> JSONResponse:
    payload = ErrorResponse(kind=type(exc).__name__, error=str(exc))
    return JSONResponse(status_code=400, content=payload.model_dump())


def _scores_model(report: EvalReport) -> ScoresModel:
    return ScoresModel(
        pipeline=report.pipeline.value,
        split=report.split,
        accuracy=report.accuracy,
        macro_precision=report.macro_precision,
        macro_recall=report.macro_recall,
        macro_f1=report.macro_f1,
        weighted_precision=report.weighted_precision,
        weighted_recall=report.weighted_recall,
        weighted_f1=report.weighted_f1,
    )


@app.get("/health", response_model=HealthResponse)
def health() -> HealthResponse:
    return HealthResponse(version=__version__)


@app.post("/check", response_model=CheckResponse)
def check(req: CheckRequest) -> CheckResponse:
    result = workflows.cmd_check(req.data_root)
    return CheckResponse(
        classes=result.class_counts,
        total=result.total,
        size_histogram=result.size_histogram,
        imbalance_ratio=result.imbalance_ratio,
    )


@app.post("/features", response_model=FeaturesResponse)
def features(req: FeaturesRequest) -> FeaturesResponse:
    result = workflows.cmd_features(
        req.data_root,
        pipeline_from_name(req.pipeline),
        req.seed,
        req.out_path,
        roi_crop=req.roi_crop,
    )
    return FeaturesResponse(
        train_path=result.train_path,
        val_path=result.val_path,
        test_path=result.test_path,
        dim=result.dim,
        train_count=result.train_count,
        val_count=result.val_count,
        test_count=result.test_count,
        seconds=result.seconds,
    )


@app.post("/train", response_model=TrainResponse)
def train(req: TrainRequest) -> TrainResponse:
    result = workflows.cmd_train(req.train_cache, req.c, req.gamma, req.out_model)
    return TrainResponse(
        model_path=result.model_path,
        classes=result.classes,
        pair_count=len(result.pairs),
        pairs=[
            PairSummaryModel(
                class_a=p.class_a,
                class_b=p.class_b,
                sv_count=p.sv_count,
                converged=p.converged,
            )
            for p in result.pairs
        ],
        seconds=result.seconds,
    )


@app.post("/eval", response_model=EvalResponse)
def evaluate(req: EvalRequest) -> EvalResponse:
    result = workflows.cmd_eval(req.model, req.cache, req.format, req.split, req.out)
    return EvalResponse(
        scores=_scores_model(result.report),
        rendered=result.rendered,
        written_to=result.written_to,
        seconds=result.seconds,
    )


@app.post("/bench", response_model=BenchResponse)
def bench(req: BenchRequest) -> BenchResponse:
    result = workflows.cmd_bench(
        req.data_root, req.seed, req.out_dir, roi_crop=req.roi_crop
    )
    return BenchResponse(
        rows=[_scores_model(r) for r in result.reports],
        timings=[
            TimingModel(
                pipeline=t.pipeline.value,
                preprocess_seconds=t.preprocess_seconds,
                train_seconds=t.train_seconds,
                eval_seconds=t.eval_seconds,
            )
            for t in result.timings
        ],
        failures=[FailureModel(pipeline=p, error=e) for p, e in result.failures],
        files=result.files,
    )


@app.post("/tune", response_model=TuneResponse)
def tune(req: TuneRequest) -> TuneResponse:
    result = workflows.cmd_tune(req.train_cache, req.seed, req.out)
    return TuneResponse(
        c=result.c,
        gamma=result.gamma,
        candidates=[
            CandidateModel(stage=c.stage, c=c.c, gamma=c.gamma, score=c.score)
            for c in result.candidates
        ],
        written_to=result.written_to,
        seconds=result.seconds,
    )

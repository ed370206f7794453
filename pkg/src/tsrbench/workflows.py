"""End-to-end operations behind the service endpoints and CLI commands:
dataset checks, feature extraction to cache files, training, evaluation,
the all-pipelines benchmark, and hyperparameter tuning.

Everything here is deterministic from (data root contents, seed) except
wall-clock timings, which are kept out of the comparable artifacts.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cache import FeatureCache, load_cache, save_cache
from .dataset import (
    LabeledSample,
    SplitConfig,
    load_test_set,
    load_training_pool,
    parse_annotation_csv,
    shuffle_split,
)
from .hog import HogConfig
from .metrics import EvalReport, confusion, make_report
from .pipeline import PIPELINE_ORDER, PipelineKind, apply_pipeline
from .svm import (
    DEFAULT_C,
    DEFAULT_GAMMA,
    MulticlassSvmModel,
    TrainConfig,
    load_model,
    predict_batch,
    save_model,
    train_multiclass,
)
from .tuning import two_stage_search


class UnknownFormat(ValueError):
    pass


class LayoutError(ValueError):
    pass


_TRAIN_CANDIDATES = (
    ".",
    "training",
    "Training",
    "train",
    "Final_Training/Images",
    "GTSRB/Training",
    "GTSRB/Final_Training/Images",
)
_TEST_CANDIDATES = (
    "test",
    "Test",
    "Final_Test/Images",
    "GTSRB/Final_Test/Images",
)


def resolve_training_root(data_root: str | Path) -> Path:
    root = Path(data_root)
    for rel in _TRAIN_CANDIDATES:
        cand = root / rel
        if (cand / "00000").is_dir():
            return cand
    raise LayoutError(
        f"no class directory 00000 under {root} or its usual subdirectories"
    )


def resolve_test_layout(data_root: str | Path) -> tuple[Path, Path]:
    """Locate the flat test image directory and its ground-truth CSV."""
    root = Path(data_root)
    for rel in _TEST_CANDIDATES:
        cand = root / rel
        if cand.is_dir():
            for csv in (cand / "GT-final_test.csv", root / "GT-final_test.csv"):
                if csv.is_file():
                    return cand, csv
    raise LayoutError(
        f"no test directory with a GT-final_test.csv under {root}"
    )


# ---------------------------------------------------------------------------
# check
# ---------------------------------------------------------------------------

_SIZE_BUCKETS = ((0, 32), (33, 64), (65, 128), (129, 10 ** 9))


@dataclass(frozen=True)
class CheckResult:
    class_counts: dict[int, int]
    total: int
    size_histogram: dict[str, int]
    imbalance_ratio: float  # largest class count / smallest class count


def cmd_check(data_root: str | Path) -> CheckResult:
    """Summarize the training layout from the annotation CSVs alone (no
    image decoding): per-class counts, original-size histogram, and the
    max/min class imbalance ratio."""
    train_root = resolve_training_root(data_root)
    class_dirs = sorted(
        d for d in train_root.iterdir() if d.is_dir() and d.name.isdigit()
    )
    counts: dict[int, int] = {}
    histogram = {f"{lo}-{hi}" if hi < 10 ** 9 else f">={lo}": 0 for lo, hi in _SIZE_BUCKETS}
    for d in class_dirs:
        annotations = parse_annotation_csv((d / f"GT-{d.name}.csv").read_text())
        counts[int(d.name)] = len(annotations)
        for ann in annotations:
            side = max(ann.width, ann.height)
            for (lo, hi), key in zip(_SIZE_BUCKETS, histogram):
                if lo <= side <= hi:
                    histogram[key] += 1
                    break
    nonzero = [c for c in counts.values() if c > 0]
    ratio = (max(nonzero) / min(nonzero)) if nonzero else 1.0
    return CheckResult(
        class_counts=counts,
        total=sum(counts.values()),
        size_histogram=histogram,
        imbalance_ratio=ratio,
    )


# ---------------------------------------------------------------------------
# features
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FeaturesResult:
    train_path: str
    val_path: str
    test_path: str
    dim: int
    train_count: int
    val_count: int
    test_count: int
    seconds: float


def extract_features(
    samples: list[LabeledSample],
    kind: PipelineKind,
    hog_cfg: HogConfig = HogConfig(),
) -> tuple[np.ndarray, np.ndarray]:
    """Run one pipeline over a sample list; returns (labels u32, rows f32)."""
    labels = np.fromiter((s.label for s in samples), dtype=np.uint32, count=len(samples))
    rows = np.empty((len(samples), hog_cfg.descriptor_length), dtype=np.float32)
    for i, sample in enumerate(samples):
        rows[i] = apply_pipeline(kind, sample.image, hog_cfg)
    return labels, rows


def _write_split_caches(
    kind: PipelineKind,
    seed: int,
    out_path: str | Path,
    train: list[LabeledSample],
    val: list[LabeledSample],
    test: list[LabeledSample],
) -> FeaturesResult:
    started = time.perf_counter()
    paths: dict[str, str] = {}
    counts: dict[str, int] = {}
    dim = HogConfig().descriptor_length
    for name, part in (("train", train), ("val", val), ("test", test)):
        labels, rows = extract_features(part, kind)
        dim = rows.shape[1]
        target = f"{out_path}.{name}"
        save_cache(FeatureCache(kind, seed, labels, rows), target)
        paths[name] = target
        counts[name] = len(part)
    return FeaturesResult(
        train_path=paths["train"],
        val_path=paths["val"],
        test_path=paths["test"],
        dim=dim,
        train_count=counts["train"],
        val_count=counts["val"],
        test_count=counts["test"],
        seconds=time.perf_counter() - started,
    )


def cmd_features(
    data_root: str | Path,
    pipeline: PipelineKind,
    seed: int,
    out_path: str | Path,
    *,
    roi_crop: bool = False,
) -> FeaturesResult:
    """Load the pool, split 80:20 with the seed, extract features for the
    train/validation parts and the test set, and write the three caches
    <out_path>.train, <out_path>.val, <out_path>.test."""
    train_root = resolve_training_root(data_root)
    test_root, test_csv = resolve_test_layout(data_root)
    pool = load_training_pool(train_root, roi_crop=roi_crop)
    train, val = shuffle_split(pool, SplitConfig(seed=seed))
    test = load_test_set(test_root, test_csv, roi_crop=roi_crop)
    return _write_split_caches(pipeline, seed, out_path, train, val, test)


# ---------------------------------------------------------------------------
# train
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PairSummary:
    class_a: int
    class_b: int
    sv_count: int
    converged: bool


@dataclass(frozen=True)
class TrainResult:
    model_path: str
    classes: list[int]
    pairs: list[PairSummary]
    seconds: float

    @property
    def non_converged(self) -> list[PairSummary]:
        return [p for p in self.pairs if not p.converged]


def cmd_train(
    train_cache: str | Path,
    c: float = DEFAULT_C,
    gamma: float = DEFAULT_GAMMA,
    out_model: str | Path = "model.tsrm",
) -> TrainResult:
    started = time.perf_counter()
    cached = load_cache(train_cache)
    model = train_multiclass(
        cached.features.astype(np.float64),
        cached.labels.astype(np.int64),
        TrainConfig(c=c, gamma=gamma),
    )
    save_model(model, out_model)
    pairs = [
        PairSummary(a, b, len(m.support_vectors), m.converged)
        for a, b, m in model.pairs
    ]
    return TrainResult(
        model_path=str(out_model),
        classes=model.classes,
        pairs=pairs,
        seconds=time.perf_counter() - started,
    )


# ---------------------------------------------------------------------------
# eval
# ---------------------------------------------------------------------------

REPORT_COLUMNS = ("Method", "F1 Score", "Accuracy", "Precision", "Recall")


def _report_cells(report: EvalReport, weighted: bool = False) -> list[str]:
    if weighted:
        values = (report.weighted_f1, report.accuracy,
                  report.weighted_precision, report.weighted_recall)
    else:
        values = (report.macro_f1, report.accuracy,
                  report.macro_precision, report.macro_recall)
    return [report.pipeline.value] + [f"{v:.6f}" for v in values]


def render_csv(reports: list[EvalReport]) -> str:
    lines = [";".join(REPORT_COLUMNS)]
    lines += [";".join(_report_cells(r)) for r in reports]
    return "\n".join(lines) + "\n"


def render_markdown(reports: list[EvalReport]) -> str:
    def table(weighted: bool) -> list[str]:
        head = "| " + " | ".join(REPORT_COLUMNS) + " |"
        rule = "|" + "|".join(["---"] * len(REPORT_COLUMNS)) + "|"
        body = ["| " + " | ".join(_report_cells(r, weighted)) + " |" for r in reports]
        return [head, rule, *body]

    lines = ["### Macro averages", ""]
    lines += table(weighted=False)
    lines += ["", "### Support-weighted averages", ""]
    lines += table(weighted=True)
    return "\n".join(lines) + "\n"


def render_report(reports: list[EvalReport], fmt: str) -> str:
    if fmt == "csv":
        return render_csv(reports)
    if fmt == "md":
        return render_markdown(reports)
    raise UnknownFormat(f"unknown report format {fmt!r}; expected 'md' or 'csv'")


def _split_from_path(path: str | Path) -> str:
    suffix = str(path).rsplit(".", 1)[-1]
    return {"val": "validation", "test": "test", "train": "train"}.get(
        suffix, "validation"
    )


@dataclass(frozen=True)
class EvalResult:
    report: EvalReport
    rendered: str
    written_to: str | None
    seconds: float


def evaluate_model(
    model: MulticlassSvmModel, cached: FeatureCache, split: str
) -> EvalReport:
    predicted = predict_batch(model, cached.features.astype(np.float64))
    truth = cached.labels.astype(np.int64)
    k = max(int(truth.max(initial=0)), int(predicted.max(initial=0)), max(model.classes)) + 1
    return make_report(cached.pipeline, split, confusion(truth, predicted, k))


def cmd_eval(
    model_path: str | Path,
    cache_path: str | Path,
    fmt: str = "md",
    split: str | None = None,
    out: str | Path | None = None,
) -> EvalResult:
    started = time.perf_counter()
    if fmt not in ("md", "csv"):
        raise UnknownFormat(f"unknown report format {fmt!r}; expected 'md' or 'csv'")
    model = load_model(model_path)
    cached = load_cache(cache_path)
    report = evaluate_model(model, cached, split or _split_from_path(cache_path))
    rendered = render_report([report], fmt)
    written_to = None
    if out is not None:
        Path(out).write_text(rendered)
        written_to = str(out)
    return EvalResult(
        report=report,
        rendered=rendered,
        written_to=written_to,
        seconds=time.perf_counter() - started,
    )


# ---------------------------------------------------------------------------
# bench
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PipelineTiming:
    pipeline: PipelineKind
    preprocess_seconds: float
    train_seconds: float
    eval_seconds: float


@dataclass(frozen=True)
class BenchResult:
    reports: list[EvalReport]  # 2 per pipeline: validation then test
    timings: list[PipelineTiming]
    failures: list[tuple[str, str]]  # (pipeline name, error)
    files: list[str]


def cmd_bench(
    data_root: str | Path,
    seed: int,
    out_dir: str | Path,
    *,
    roi_crop: bool = False,
    pipelines: tuple[PipelineKind, ...] = PIPELINE_ORDER,
    c: float = DEFAULT_C,
    gamma: float = DEFAULT_GAMMA,
) -> BenchResult:
    """Feature extraction, training and evaluation for every pipeline with
    one shared seed; writes tables-1 (validation) and tables-2 (test) in
    both formats plus a timing summary.  Timings go to their own file so
    the tables are byte-comparable across runs."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    train_root = resolve_training_root(data_root)
    test_root, test_csv = resolve_test_layout(data_root)
    pool = load_training_pool(train_root, roi_crop=roi_crop)
    train, val = shuffle_split(pool, SplitConfig(seed=seed))
    test = load_test_set(test_root, test_csv, roi_crop=roi_crop)

    reports: list[EvalReport] = []
    timings: list[PipelineTiming] = []
    failures: list[tuple[str, str]] = []
    files: list[str] = []

    for kind in pipelines:
        try:
            features = _write_split_caches(
                kind, seed, out / f"features-{kind.value}", train, val, test
            )
            files += [features.train_path, features.val_path, features.test_path]

            model_path = out / f"model-{kind.value}.tsrm"
            trained = cmd_train(features.train_path, c, gamma, model_path)
            files.append(trained.model_path)

            eval_started = time.perf_counter()
            model = load_model(model_path)
            for cache_path, split in (
                (features.val_path, "validation"),
                (features.test_path, "test"),
            ):
                reports.append(evaluate_model(model, load_cache(cache_path), split))
            eval_seconds = time.perf_counter() - eval_started

            timings.append(
                PipelineTiming(kind, features.seconds, trained.seconds, eval_seconds)
            )
        except (ValueError, OSError) as exc:
            failures.append((kind.value, str(exc)))

    validation = [r for r in reports if r.split == "validation"]
    testing = [r for r in reports if r.split == "test"]
    for stem, part in (("tables-1", validation), ("tables-2", testing)):
        for fmt in ("md", "csv"):
            path = out / f"{stem}.{fmt}"
            path.write_text(render_report(part, fmt))
            files.append(str(path))

    timing_lines = ["pipeline;preprocess_seconds;train_seconds;eval_seconds"]
    timing_lines += [
        f"{t.pipeline.value};{t.preprocess_seconds:.3f};"
        f"{t.train_seconds:.3f};{t.eval_seconds:.3f}"
        for t in timings
    ]
    timing_path = out / "timings.csv"
    timing_path.write_text("\n".join(timing_lines) + "\n")
    files.append(str(timing_path))

    return BenchResult(reports=reports, timings=timings, failures=failures, files=files)


# ---------------------------------------------------------------------------
# tune
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Candidate:
    stage: int
    c: float
    gamma: float
    score: float


@dataclass(frozen=True)
class TuneResult:
    c: float
    gamma: float
    candidates: list[Candidate]
    written_to: str | None
    seconds: float


def cmd_tune(
    train_cache: str | Path, seed: int, out: str | Path | None = None
) -> TuneResult:
    started = time.perf_counter()
    cached = load_cache(train_cache)
    candidates: list[Candidate] = []

    def on_candidate(stage: int, c: float, gamma: float, score: float) -> None:
        candidates.append(Candidate(stage, c, gamma, score))

    c, gamma = two_stage_search(
        cached.features.astype(np.float64),
        cached.labels.astype(np.int64),
        seed,
        on_candidate,
    )
    written_to = None
    if out is not None:
        Path(out).write_text(json.dumps({"c": c, "gamma": gamma}, indent=2) + "\n")
        written_to = str(out)
    return TuneResult(
        c=c,
        gamma=gamma,
        candidates=candidates,
        written_to=written_to,
        seconds=time.perf_counter() - started,
    )

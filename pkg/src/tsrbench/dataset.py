"""Ingestion of the GTSRB on-disk layout.

Training data lives in per-class directories 00000, 00001, ... each with a
GT-<class>.csv annotation file and PPM images; test data is one flat
directory plus a single CSV.  Loading decodes, optionally crops to the
annotated sign box, and resizes everything to the 32x32 working size.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .imgcore import Image, ImageError, decode_ppm, resize_bilinear
from .rng import Xorshift64Star

CSV_HEADER = "Filename;Width;Height;Roi.X1;Roi.Y1;Roi.X2;Roi.Y2;ClassId"
N_CLASSES = 43
SAMPLE_SIZE = 32


class DatasetError(ValueError):
    pass


class MissingHeader(DatasetError):
    pass


class BadFieldCount(DatasetError):
    pass


class NonNumericField(DatasetError):
    pass


class RoiOutOfBounds(DatasetError):
    pass


class InvalidClassId(DatasetError):
    pass


class MissingClassDirectory(DatasetError):
    pass


class TooFewSamples(DatasetError):
    pass


class DecodeFailure(DatasetError):
    """One or more referenced images failed to decode; carries every
    (path, reason) pair so a broken tree is reported in full."""

    def __init__(self, failures: list[tuple[str, str]]):
        self.failures = failures
        lines = "\n".join(f"  {path}: {reason}" for path, reason in failures)
        super().__init__(f"{len(failures)} file(s) failed to decode:\n{lines}")


@dataclass(frozen=True)
class Annotation:
    filename: str
    width: int
    height: int
    roi: tuple[int, int, int, int]  # (x1, y1, x2, y2), x2/y2 exclusive
    class_id: int


@dataclass(frozen=True)
class LabeledSample:
    image: Image  # BGR, SAMPLE_SIZE x SAMPLE_SIZE
    label: int


@dataclass(frozen=True)
class SplitConfig:
    train_fraction: float = 0.8
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.train_fraction < 1.0):
            raise ValueError("train_fraction must be strictly between 0 and 1")


def parse_annotation_csv(text: str) -> list[Annotation]:
    """Parse one semicolon-separated annotation file.  The first line must
    be the exact GTSRB header; blank lines are ignored."""
    lines = text.splitlines()
    if not lines or lines[0].strip() != CSV_HEADER:
        raise MissingHeader(f"first line must be {CSV_HEADER!r}")

    annotations: list[Annotation] = []
    for row_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split(";")
        if len(fields) != 8:
            raise BadFieldCount(f"row {row_no}: expected 8 fields, got {len(fields)}")
        numbers: list[int] = []
        for column, raw in zip(CSV_HEADER.split(";")[1:], fields[1:]):
            try:
                numbers.append(int(raw))
            except ValueError:
                raise NonNumericField(
                    f"row {row_no}, column {column}: {raw!r} is not an integer"
                ) from None
        width, height, x1, y1, x2, y2, class_id = numbers
        if not (0 <= x1 < x2 <= width and 0 <= y1 < y2 <= height):
            raise RoiOutOfBounds(
                f"row {row_no}: box ({x1},{y1})-({x2},{y2}) "
                f"does not fit a {width}x{height} image"
            )
        if not (0 <= class_id < N_CLASSES):
            raise InvalidClassId(f"row {row_no}: class id {class_id} outside 0..42")
        annotations.append(Annotation(fields[0], width, height, (x1, y1, x2, y2), class_id))
    return annotations


def _load_one(path: Path, ann: Annotation, roi_crop: bool, size: int) -> Image:
    img = decode_ppm(path.read_bytes())
    if roi_crop:
        x1, y1, x2, y2 = ann.roi
        if x2 > img.width or y2 > img.height:
            raise RoiOutOfBounds(
                f"{path.name}: box exceeds the actual {img.width}x{img.height} image"
            )
        img = Image(img.data[y1:y2, x1:x2].copy(), img.color_space)
    return resize_bilinear(img, size, size)


def _load_annotated(
    base: Path, annotations: list[Annotation], roi_crop: bool, size: int,
    samples: list[LabeledSample], failures: list[tuple[str, str]],
) -> None:
    for ann in annotations:
        path = base / ann.filename
        try:
            img = _load_one(path, ann, roi_crop, size)
        except (ImageError, RoiOutOfBounds, OSError) as exc:
            failures.append((str(path), str(exc)))
            continue
        samples.append(LabeledSample(img, ann.class_id))


def load_training_pool(
    root: str | Path, *, roi_crop: bool = False, size: int = SAMPLE_SIZE
) -> list[LabeledSample]:
    """Load every annotated training image, ordered by (class directory,
    annotation row).  Class directories must be contiguous from 00000; any
    decode failure aborts the whole load so no sample is silently lost."""
    root = Path(root)
    class_dirs = sorted(
        d for d in root.iterdir() if d.is_dir() and re.fullmatch(r"\d{5}", d.name)
    )
    if not class_dirs:
        raise MissingClassDirectory(f"no class directories (00000...) under {root}")
    for expected, d in enumerate(class_dirs):
        if int(d.name) != expected:
            raise MissingClassDirectory(f"{root / f'{expected:05d}'} is missing")

    samples: list[LabeledSample] = []
    failures: list[tuple[str, str]] = []
    for d in class_dirs:
        csv_path = d / f"GT-{d.name}.csv"
        annotations = parse_annotation_csv(csv_path.read_text())
        _load_annotated(d, annotations, roi_crop, size, samples, failures)
    if failures:
        raise DecodeFailure(failures)
    return samples


def load_test_set(
    root: str | Path,
    gt_csv: str | Path,
    *,
    roi_crop: bool = False,
    size: int = SAMPLE_SIZE,
) -> list[LabeledSample]:
    """Load the flat test directory in CSV row order."""
    root = Path(root)
    annotations = parse_annotation_csv(Path(gt_csv).read_text())
    samples: list[LabeledSample] = []
    failures: list[tuple[str, str]] = []
    _load_annotated(root, annotations, roi_crop, size, samples, failures)
    if failures:
        raise DecodeFailure(failures)
    return samples


def shuffle_split(
    samples: Sequence[LabeledSample], cfg: SplitConfig
) -> tuple[list[LabeledSample], list[LabeledSample]]:
    """Fisher-Yates shuffle seeded by cfg.seed, then a head/tail cut at
    floor(train_fraction * n).  Together the two parts are a permutation
    of the input."""
    if len(samples) < 2:
        raise TooFewSamples("need at least 2 samples to split")
    shuffled = list(samples)
    Xorshift64Star(cfg.seed).shuffle(shuffled)
    cut = math.floor(cfg.train_fraction * len(shuffled))
    return shuffled[:cut], shuffled[cut:]

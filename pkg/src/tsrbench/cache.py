"""Feature cache files.

Extracting descriptors for the full training pool takes far longer than
most experiments that consume them, so features are persisted once per
(pipeline, seed) and reloaded byte-for-byte identically afterwards.

Layout (little-endian, trailing CRC32 over everything before it):
magic "TSRF", version u32=1, pipeline name (u32 length + utf-8), seed u64,
dim u32, count u32, then per sample a u32 label followed by dim f32s.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .binio import ByteWriter, FormatError, open_checked
from .pipeline import PipelineKind, pipeline_from_name

CACHE_MAGIC = b"TSRF"
CACHE_VERSION = 1


@dataclass
class FeatureCache:
    pipeline: PipelineKind
    seed: int
    labels: np.ndarray    # (n,) uint32
    features: np.ndarray  # (n, dim) float32

    def __post_init__(self):
        self.labels = np.ascontiguousarray(self.labels, dtype=np.uint32)
        self.features = np.ascontiguousarray(self.features, dtype=np.float32)
        if self.features.ndim != 2:
            raise FormatError("features must be a 2-d array")
        if len(self.labels) != len(self.features):
            raise FormatError(
                f"{len(self.labels)} labels vs {len(self.features)} feature rows"
            )

    @property
    def dim(self) -> int:
        return self.features.shape[1]


def _row_dtype(dim: int) -> np.dtype:
    return np.dtype([("label", "<u4"), ("features", "<f4", (dim,))])


def save_cache(cache: FeatureCache, path) -> None:
    w = ByteWriter()
    w.raw(CACHE_MAGIC)
    w.u32(CACHE_VERSION)
    w.string(cache.pipeline.value)
    w.u64(cache.seed)
    w.u32(cache.dim)
    w.u32(len(cache.labels))
    rows = np.empty(len(cache.labels), dtype=_row_dtype(cache.dim))
    rows["label"] = cache.labels
    rows["features"] = cache.features
    w.raw(rows.tobytes())
    with open(path, "wb") as fh:
        fh.write(w.finish())


def load_cache(path) -> FeatureCache:
    with open(path, "rb") as fh:
        data = fh.read()
    r = open_checked(data, CACHE_MAGIC, CACHE_VERSION)
    pipeline = pipeline_from_name(r.string())
    seed = r.u64()
    dim = r.u32()
    count = r.u32()
    rows = np.frombuffer(r.take(count * (4 + 4 * dim)), dtype=_row_dtype(dim))
    if not r.exhausted:
        raise FormatError("trailing bytes after the last sample row")
    return FeatureCache(
        pipeline=pipeline,
        seed=seed,
        labels=rows["label"].astype(np.uint32),
        features=rows["features"].reshape(count, dim).astype(np.float32),
    )

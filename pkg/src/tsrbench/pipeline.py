"""The seven preprocessing pipelines.

Every pipeline starts from a BGR window, applies zero or more enhancement
or color-space stages, then blurs 3x3 and computes the HOG descriptor.
The names are the exact strings used in reports, caches and the CLI.
"""

from __future__ import annotations

import enum
from typing import Callable

import numpy as np

from .enhance import apply_clahe_dynamic, equalize_hist
from .hog import HogConfig, hog_descriptor
from .imgcore import (
    ColorSpace,
    Image,
    bgr_to_hsv,
    bgr_to_yuv,
    extract_channel,
    gaussian_blur_3x3,
    hsv_to_bgr,
    replace_channel,
)


class UnknownPipelineName(ValueError):
    pass


class WrongInputSize(ValueError):
    pass


def hue_equalize(img: Image) -> Image:
    """Equalize the hue plane: convert to HSV, run the 256-bin histogram
    equalization on H, fold the result back onto the 0-179 hue scale
    (hue is an angle, so values past 179 wrap), and convert back to BGR
    with the original S and V."""
    hsv = bgr_to_hsv(img)
    h_eq = equalize_hist(extract_channel(hsv, 0))
    h_wrapped = Image(h_eq.data[:, :, 0] % 180, ColorSpace.GRAY)
    return hsv_to_bgr(replace_channel(hsv, 0, h_wrapped))


class PipelineKind(enum.Enum):
    HOG = "HOG"
    CLAHE_HOG = "CLAHE-HOG"
    YUV_HOG = "YUV-HOG"
    HUE_HOG = "HUE-HOG"
    CLAHE_YUV_HOG = "CLAHE-YUV-HOG"
    HUE_YUV_HOG = "HUE-YUV-HOG"
    CLAHE_HUE_YUV_HOG = "CLAHE-HUE-YUV-HOG"


# Report and table ordering.
PIPELINE_ORDER: tuple[PipelineKind, ...] = (
    PipelineKind.HOG,
    PipelineKind.CLAHE_HOG,
    PipelineKind.YUV_HOG,
    PipelineKind.HUE_HOG,
    PipelineKind.CLAHE_YUV_HOG,
    PipelineKind.HUE_YUV_HOG,
    PipelineKind.CLAHE_HUE_YUV_HOG,
)

_STAGES: dict[PipelineKind, tuple[Callable[[Image], Image], ...]] = {
    PipelineKind.HOG: (),
    PipelineKind.CLAHE_HOG: (apply_clahe_dynamic,),
    PipelineKind.YUV_HOG: (bgr_to_yuv,),
    PipelineKind.HUE_HOG: (hue_equalize,),
    PipelineKind.CLAHE_YUV_HOG: (apply_clahe_dynamic, bgr_to_yuv),
    PipelineKind.HUE_YUV_HOG: (hue_equalize, bgr_to_yuv),
    PipelineKind.CLAHE_HUE_YUV_HOG: (apply_clahe_dynamic, hue_equalize, bgr_to_yuv),
}


def pipeline_from_name(name: str) -> PipelineKind:
    try:
        return PipelineKind(name)
    except ValueError:
        known = ", ".join(p.value for p in PIPELINE_ORDER)
        raise UnknownPipelineName(f"unknown pipeline {name!r}; known: {known}") from None


def apply_pipeline(
    kind: PipelineKind, img: Image, hog_cfg: HogConfig = HogConfig()
) -> np.ndarray:
    """Run one pipeline on a BGR window of the HOG window size and return
    the descriptor.  Stages in order, then the 3x3 blur, then HOG."""
    if img.width != hog_cfg.window or img.height != hog_cfg.window:
        raise WrongInputSize(
            f"pipelines expect {hog_cfg.window}x{hog_cfg.window} input, "
            f"got {img.width}x{img.height}"
        )
    out = img
    for stage in _STAGES[kind]:
        out = stage(out)
    return hog_descriptor(gaussian_blur_3x3(out), hog_cfg)

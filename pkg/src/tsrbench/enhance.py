"""Histogram equalization and contrast-limited adaptive equalization.

Both operators work on a single 8-bit plane.  The adaptive variant tiles
the plane on a fixed grid, equalizes each tile under a clip limit with
exact redistribution of the clipped mass, and blends the per-tile lookup
tables bilinearly between tile centers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .imgcore import (
    ColorSpace,
    Image,
    ImageError,
    WrongColorSpace,
    round_clamp_u8,
    bgr_to_yuv,
    extract_channel,
    luminance_stddev,
    replace_channel,
    yuv_to_bgr,
)


class NotSingleChannel(ImageError):
    pass


class ImageSmallerThanGrid(ImageError):
    pass


LEVELS = 256


def equalize_hist(img: Image) -> Image:
    """Classic global equalization:

        m(v) = round(255 * (cdf(v) - cdf_min) / (N - cdf_min))

    where cdf_min is the cdf at the darkest occupied bin.  A constant
    plane (N == cdf_min) maps to all zeros.
    """
    if img.channels != 1:
        raise NotSingleChannel("equalize_hist needs a single-channel image")
    plane = img.data[:, :, 0]
    hist = np.bincount(plane.ravel(), minlength=LEVELS)
    cdf = np.cumsum(hist)
    total = plane.size
    cdf_min = int(cdf[np.flatnonzero(hist)[0]])
    if total == cdf_min:
        lut = np.zeros(LEVELS, dtype=np.uint8)
    else:
        scaled = (cdf - cdf_min).astype(np.float64) * 255.0 / (total - cdf_min)
        lut = round_clamp_u8(scaled)
    return Image(lut[plane], img.color_space)


def dynamic_clip_limit(stddev: float) -> float:
    """Pick a clip limit from the luminance spread: flat images get strong
    amplification, contrasty ones get almost none."""
    if stddev < 0:
        raise ValueError("standard deviation cannot be negative")
    if stddev < 50.0:
        return 4.0
    if stddev < 100.0:
        return 2.0
    return 1.0


@dataclass(frozen=True)
class ClaheConfig:
    """clip_limit is in multiples of the uniform histogram height; the
    per-tile ceiling in counts is max(1, floor(clip_limit * tile_pixels /
    256)).  tile_grid is (columns, rows)."""

    clip_limit: float
    tile_grid: tuple[int, int] = (8, 8)

    def __post_init__(self):
        if self.clip_limit <= 0:
            raise ValueError("clip_limit must be positive")
        cols, rows = self.tile_grid
        if cols < 1 or rows < 1:
            raise ValueError("tile_grid must have at least one tile per axis")


def _tile_edges(extent: int, count: int) -> list[tuple[int, int]]:
    # Equal-width tiles of floor(extent / count); the last tile absorbs
    # the remainder.
    base = extent // count
    edges = [(i * base, (i + 1) * base) for i in range(count - 1)]
    edges.append(((count - 1) * base, extent))
    return edges


def _tile_lut(tile: np.ndarray, clip_limit: float) -> np.ndarray:
    hist = np.bincount(tile.ravel(), minlength=LEVELS).astype(np.int64)
    pixels = tile.size
    ceiling = max(1, int(clip_limit * pixels / LEVELS))
    clipped = np.minimum(hist, ceiling)
    excess = int(hist.sum() - clipped.sum())
    clipped += excess // LEVELS
    clipped[: excess % LEVELS] += 1
    cdf = np.cumsum(clipped)
    return round_clamp_u8(cdf.astype(np.float64) * 255.0 / pixels)


def _blend_axis(extent: int, edges: list[tuple[int, int]]) -> tuple[np.ndarray, np.ndarray]:
    """For every coordinate along one axis: the index of the tile whose
    center lies at or before it, and the fractional distance to the next
    tile center.  Coordinates outside the first/last centers clamp to
    weight 0/1, so border pixels use the nearest tile alone."""
    centers = np.array([(lo + hi - 1) / 2.0 for lo, hi in edges])
    coords = np.arange(extent, dtype=np.float64)
    if len(edges) == 1:
        return np.zeros(extent, dtype=np.intp), np.zeros(extent)
    lo_idx = np.clip(np.searchsorted(centers, coords, side="right") - 1, 0, len(edges) - 2)
    span = centers[lo_idx + 1] - centers[lo_idx]
    frac = np.clip((coords - centers[lo_idx]) / span, 0.0, 1.0)
    return lo_idx, frac


def clahe(img: Image, config: ClaheConfig) -> Image:
    """Contrast-limited adaptive histogram equalization of one plane.

    Each tile's histogram is clipped at the ceiling; the clipped mass is
    redistributed exactly: floor(excess / 256) to every bin, and the
    remaining excess mod 256 counts one each to bins 0, 1, ...  Every
    output pixel blends the lookup tables of its up-to-four surrounding
    tile centers bilinearly.
    """
    if img.channels != 1:
        raise NotSingleChannel("clahe needs a single-channel image")
    cols, rows = config.tile_grid
    if img.width < cols or img.height < rows:
        raise ImageSmallerThanGrid(
            f"{img.width}x{img.height} image cannot be tiled {cols}x{rows}"
        )
    plane = img.data[:, :, 0]
    x_edges = _tile_edges(img.width, cols)
    y_edges = _tile_edges(img.height, rows)

    luts = np.empty((rows, cols, LEVELS), dtype=np.uint8)
    for r, (y0, y1) in enumerate(y_edges):
        for c, (x0, x1) in enumerate(x_edges):
            luts[r, c] = _tile_lut(plane[y0:y1, x0:x1], config.clip_limit)

    jx, fx = _blend_axis(img.width, x_edges)
    jy, fy = _blend_axis(img.height, y_edges)
    jx2 = np.minimum(jx + 1, cols - 1)
    jy2 = np.minimum(jy + 1, rows - 1)

    row_lo = jy[:, None]
    row_hi = jy2[:, None]
    col_lo = jx[None, :]
    col_hi = jx2[None, :]
    v00 = luts[row_lo, col_lo, plane].astype(np.float64)
    v01 = luts[row_lo, col_hi, plane].astype(np.float64)
    v10 = luts[row_hi, col_lo, plane].astype(np.float64)
    v11 = luts[row_hi, col_hi, plane].astype(np.float64)

    wx = fx[None, :]
    wy = fy[:, None]
    top = v00 * (1.0 - wx) + v01 * wx
    bot = v10 * (1.0 - wx) + v11 * wx
    return Image(round_clamp_u8(top * (1.0 - wy) + bot * wy), img.color_space)


def apply_clahe_dynamic(img: Image) -> Image:
    """CLAHE with the clip limit chosen from the image's own contrast,
    always on an 8x8 grid.  GRAY images are equalized directly; BGR images
    are converted to YUV, the Y plane is equalized, and the result is
    converted back to BGR.
    """
    if img.color_space is ColorSpace.GRAY:
        limit = dynamic_clip_limit(luminance_stddev(img))
        return clahe(img, ClaheConfig(limit))
    if img.color_space is ColorSpace.BGR:
        yuv = bgr_to_yuv(img)
        limit = dynamic_clip_limit(luminance_stddev(yuv))
        y_eq = clahe(extract_channel(yuv, 0), ClaheConfig(limit))
        return yuv_to_bgr(replace_channel(yuv, 0, y_eq))
    raise WrongColorSpace("dynamic CLAHE expects a GRAY or BGR image")

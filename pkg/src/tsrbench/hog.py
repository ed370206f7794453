"""Histogram-of-oriented-gradients descriptor.

Fixed geometry throughout the project: a 32x32 window, 16x16 blocks
sliding by 8 pixels, 8x8 cells, 9 unsigned orientation bins.  That is a
3x3 grid of blocks, 4 cells each, 324 components total.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .imgcore import Image, ImageError


class WrongWindowSize(ImageError):
    pass


@dataclass(frozen=True)
class HogConfig:
    window: int = 32
    block: int = 16
    stride: int = 8
    cell: int = 8
    bins: int = 9
    clip: float = 0.2
    epsilon: float = 1e-5

    def __post_init__(self):
        if min(self.window, self.block, self.stride, self.cell) < 1:
            raise ValueError("geometry fields must be positive")
        if self.bins < 2:
            raise ValueError("need at least two orientation bins")
        if self.block > self.window:
            raise ValueError("block cannot exceed the window")
        for name in ("window", "block", "stride"):
            if getattr(self, name) % self.cell != 0:
                raise ValueError(f"{name} must be a multiple of the cell size")
        if (self.window - self.block) % self.stride != 0:
            raise ValueError("blocks must tile the window exactly")

    @property
    def blocks_per_side(self) -> int:
        return (self.window - self.block) // self.stride + 1

    @property
    def cells_per_block_side(self) -> int:
        return self.block // self.cell

    @property
    def descriptor_length(self) -> int:
        return self.blocks_per_side ** 2 * self.cells_per_block_side ** 2 * self.bins


def compute_gradients(img: Image) -> tuple[np.ndarray, np.ndarray]:
    """Per-pixel gradient magnitude and unsigned orientation in degrees.

    Centered differences with replicated borders, computed per channel;
    each pixel keeps the channel with the largest magnitude (lowest
    channel index on ties).  Orientations fold into [0, 180); a zero
    gradient reports orientation 0.
    """
    src = img.data.astype(np.float64)
    padded_x = np.pad(src, ((0, 0), (1, 1), (0, 0)), mode="edge")
    padded_y = np.pad(src, ((1, 1), (0, 0), (0, 0)), mode="edge")
    dx = padded_x[:, 2:] - padded_x[:, :-2]
    dy = padded_y[2:] - padded_y[:-2]

    mag_sq = dx * dx + dy * dy
    best = np.argmax(mag_sq, axis=2)[:, :, None]
    dx = np.take_along_axis(dx, best, axis=2)[:, :, 0]
    dy = np.take_along_axis(dy, best, axis=2)[:, :, 0]

    magnitude = np.hypot(dx, dy)
    angle = np.degrees(np.arctan2(dy, dx))
    angle = np.mod(angle, 180.0)
    # np.mod of a tiny negative rounds up to exactly 180.0; fold it back.
    angle[angle >= 180.0] = 0.0
    angle[magnitude == 0.0] = 0.0
    return magnitude, angle


def cell_histograms(img: Image, config: HogConfig = HogConfig()) -> np.ndarray:
    """Orientation histograms per cell, shape (cells_y, cells_x, bins).

    Bin centers sit at (k + 0.5) * (180 / bins) degrees.  Each pixel's
    magnitude splits linearly between the two nearest centers, wrapping
    between the last and first bin.
    """
    if img.width != config.window or img.height != config.window:
        raise WrongWindowSize(
            f"expected a {config.window}x{config.window} window, "
            f"got {img.width}x{img.height}"
        )
    magnitude, angle = compute_gradients(img)

    bin_width = 180.0 / config.bins
    # Shift so position 0 is the first bin center; the wrap below the first
    # center lands at the top of the range.
    pos = np.mod(angle - bin_width / 2.0, 180.0)
    pos[pos >= 180.0] = 0.0  # same fold as in compute_gradients
    lo_bin = np.floor(pos / bin_width).astype(np.intp)
    frac = pos / bin_width - lo_bin
    hi_bin = (lo_bin + 1) % config.bins

    cells_per_side = config.window // config.cell
    ys, xs = np.indices((config.window, config.window))
    cell_id = (ys // config.cell) * cells_per_side + (xs // config.cell)

    n_slots = cells_per_side * cells_per_side * config.bins
    slots = np.concatenate(
        [(cell_id * config.bins + lo_bin).ravel(), (cell_id * config.bins + hi_bin).ravel()]
    )
    votes = np.concatenate(
        [(magnitude * (1.0 - frac)).ravel(), (magnitude * frac).ravel()]
    )
    hist = np.bincount(slots, weights=votes, minlength=n_slots)
    return hist.reshape(cells_per_side, cells_per_side, config.bins)


def hog_descriptor(img: Image, config: HogConfig = HogConfig()) -> np.ndarray:
    """The full descriptor: block-normalized cell histograms, concatenated
    block by block in row-major order.

    Each block vector v is L2-normalized with the epsilon guard, clipped
    at `clip`, then renormalized once more:

        v / sqrt(|v|^2 + eps^2)  ->  min(v, clip)  ->  v / sqrt(|v|^2 + eps^2)

    Every component therefore lands in [0, 1].
    """
    cells = cell_histograms(img, config)
    cpb = config.cells_per_block_side
    step = config.stride // config.cell
    n = config.blocks_per_side

    parts = []
    for by in range(n):
        for bx in range(n):
            block = cells[by * step : by * step + cpb, bx * step : bx * step + cpb]
            v = block.ravel()
            v = v / np.sqrt(np.dot(v, v) + config.epsilon ** 2)
            v = np.minimum(v, config.clip)
            v = v / np.sqrt(np.dot(v, v) + config.epsilon ** 2)
            parts.append(v)
    return np.concatenate(parts)

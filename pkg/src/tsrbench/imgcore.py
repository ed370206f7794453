"""8-bit raster images and the pixel-level primitives built on them.

Conventions shared by every operation here:

* samples are unsigned 8-bit, stored interleaved row-major as an array of
  shape (height, width, channels);
* color images use BGR channel order;
* YUV is BT.601 full range; HSV is the hexcone model with hue stored as
  angle/2 so it fits one byte (0-179);
* fractional results are rounded half-up (floor(x + 0.5)) and clamped to
  [0, 255] after rounding, in that order.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


class ColorSpace(enum.Enum):
    GRAY = "GRAY"
    BGR = "BGR"
    YUV = "YUV"
    HSV = "HSV"


class ImageError(ValueError):
    """Base class for raster validation and decoding failures."""


class MalformedHeader(ImageError):
    pass


class UnsupportedMagic(ImageError):
    pass


class MaxvalNot255(ImageError):
    pass


class TruncatedPayload(ImageError):
    pass


class ZeroDimension(ImageError):
    pass


class WrongColorSpace(ImageError):
    pass


@dataclass(frozen=True, eq=False)
class Image:
    """An 8-bit image plus the tag saying how its channels are meant.

    Single-channel images are always GRAY; three-channel images are BGR,
    YUV or HSV.  HSV additionally requires every hue sample <= 179.
    """

    data: np.ndarray
    color_space: ColorSpace

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.dtype != np.uint8:
            raise ImageError(f"samples must be uint8, got {arr.dtype}")
        if arr.ndim == 2:
            arr = arr[:, :, np.newaxis]
        if arr.ndim != 3:
            raise ImageError(f"expected 2-d or 3-d sample array, got {arr.ndim}-d")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ZeroDimension("images must be at least 1x1")
        channels = arr.shape[2]
        if channels not in (1, 3):
            raise ImageError(f"channel count must be 1 or 3, got {channels}")
        if (channels == 1) != (self.color_space is ColorSpace.GRAY):
            raise WrongColorSpace(
                f"{self.color_space.value} image cannot have {channels} channel(s)"
            )
        if self.color_space is ColorSpace.HSV and int(arr[:, :, 0].max()) > 179:
            raise ImageError("HSV hue samples must lie in [0, 179]")
        object.__setattr__(self, "data", np.ascontiguousarray(arr))

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def channels(self) -> int:
        return self.data.shape[2]


def round_clamp_u8(values: np.ndarray) -> np.ndarray:
    """Half-up rounding, then the [0, 255] clamp.  The order matters:
    255.5 rounds to 256 first and only then clamps to 255."""
    return np.clip(np.floor(values + 0.5), 0.0, 255.0).astype(np.uint8)


# ---------------------------------------------------------------------------
# netpbm decoding / encoding
# ---------------------------------------------------------------------------

_WHITESPACE = b" \t\n\r\x0b\x0c"


def _read_header(buf: bytes) -> tuple[list[bytes], int]:
    """Return the four header tokens (magic, width, height, maxval) and the
    offset of the first payload byte.  '#' starts a comment running to the
    end of the line; a single whitespace byte separates the last token from
    the payload."""
    tokens: list[bytes] = []
    i, n = 0, len(buf)
    while len(tokens) < 4:
        while i < n and (buf[i] in _WHITESPACE or buf[i] == 0x23):
            if buf[i] == 0x23:
                while i < n and buf[i] not in (0x0A, 0x0D):
                    i += 1
            else:
                i += 1
        start = i
        while i < n and buf[i] not in _WHITESPACE and buf[i] != 0x23:
            i += 1
        if i == start:
            raise MalformedHeader("header ended before all four fields were read")
        tokens.append(buf[start:i])
    if i >= n or buf[i] not in _WHITESPACE:
        raise MalformedHeader("expected one whitespace byte after maxval")
    return tokens, i + 1


def decode_ppm(data: bytes) -> Image:
    """Decode binary netpbm bytes: P5 becomes a GRAY image, P6 a BGR one
    (the file stores RGB; channels are swapped on the way in)."""
    if data[:2] not in (b"P5", b"P6"):
        raise UnsupportedMagic(f"not a binary PGM/PPM file: {data[:2]!r}")
    tokens, payload_at = _read_header(data)
    magic = tokens[0]
    if magic not in (b"P5", b"P6"):
        raise UnsupportedMagic(f"unsupported magic {magic!r}")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise MalformedHeader(f"non-numeric header fields: {tokens[1:]}") from None
    if maxval != 255:
        raise MaxvalNot255(f"only maxval 255 is supported, got {maxval}")
    if width == 0 or height == 0:
        raise ZeroDimension(f"header declares a {width}x{height} image")
    channels = 1 if magic == b"P5" else 3
    expected = width * height * channels
    payload = data[payload_at : payload_at + expected]
    if len(payload) < expected:
        raise TruncatedPayload(
            f"payload holds {len(payload)} bytes, header needs {expected}"
        )
    arr = np.frombuffer(payload, dtype=np.uint8).reshape(height, width, channels)
    if channels == 3:
        arr = arr[:, :, ::-1]  # RGB on disk, BGR in memory
        return Image(np.ascontiguousarray(arr), ColorSpace.BGR)
    return Image(arr.copy(), ColorSpace.GRAY)


def encode_ppm(img: Image) -> bytes:
    """Encode a GRAY image as binary PGM or a BGR image as binary PPM."""
    if img.color_space is ColorSpace.GRAY:
        magic, payload = b"P5", img.data
    elif img.color_space is ColorSpace.BGR:
        magic, payload = b"P6", img.data[:, :, ::-1]
    else:
        raise WrongColorSpace(f"cannot encode a {img.color_space.value} image")
    header = b"%s\n%d %d\n255\n" % (magic, img.width, img.height)
    return header + np.ascontiguousarray(payload).tobytes()


# ---------------------------------------------------------------------------
# geometry
# ---------------------------------------------------------------------------

def resize_bilinear(img: Image, out_width: int, out_height: int) -> Image:
    """Bilinear resample with center-aligned sample positions: output pixel
    j maps to source coordinate (j + 0.5) * in/out - 0.5, clamped to the
    valid range, so resizing to the same size is the identity."""
    if out_width < 1 or out_height < 1:
        raise ZeroDimension(f"target size {out_width}x{out_height} is empty")
    src = img.data.astype(np.float64)

    def axis_positions(out_n: int, in_n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        pos = (np.arange(out_n) + 0.5) * (in_n / out_n) - 0.5
        pos = np.clip(pos, 0.0, in_n - 1.0)
        lo = np.floor(pos).astype(np.intp)
        frac = pos - lo
        hi = np.minimum(lo + 1, in_n - 1)
        return lo, hi, frac

    x0, x1, fx = axis_positions(out_width, img.width)
    y0, y1, fy = axis_positions(out_height, img.height)

    top = src[y0][:, x0] * (1.0 - fx)[None, :, None] + src[y0][:, x1] * fx[None, :, None]
    bot = src[y1][:, x0] * (1.0 - fx)[None, :, None] + src[y1][:, x1] * fx[None, :, None]
    out = top * (1.0 - fy)[:, None, None] + bot * fy[:, None, None]
    return Image(round_clamp_u8(out), img.color_space)


# ---------------------------------------------------------------------------
# color conversions
# ---------------------------------------------------------------------------

def _require(img: Image, space: ColorSpace) -> None:
    if img.color_space is not space:
        raise WrongColorSpace(
            f"expected a {space.value} image, got {img.color_space.value}"
        )


def _bgr_planes(img: Image) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    f = img.data.astype(np.float64)
    return f[:, :, 0], f[:, :, 1], f[:, :, 2]


def bgr_to_gray(img: Image) -> Image:
    """BT.601 luma: 0.299 R + 0.587 G + 0.114 B, rounded half-up."""
    _require(img, ColorSpace.BGR)
    b, g, r = _bgr_planes(img)
    y = 0.299 * r + 0.587 * g + 0.114 * b
    return Image(round_clamp_u8(y), ColorSpace.GRAY)


def bgr_to_yuv(img: Image) -> Image:
    """BT.601 full-range YUV with chroma biased by +128."""
    _require(img, ColorSpace.BGR)
    b, g, r = _bgr_planes(img)
    y = 0.299 * r + 0.587 * g + 0.114 * b
    u = -0.168736 * r - 0.331264 * g + 0.5 * b + 128.0
    v = 0.5 * r - 0.418688 * g - 0.081312 * b + 128.0
    return Image(np.stack([round_clamp_u8(y), round_clamp_u8(u), round_clamp_u8(v)], axis=2), ColorSpace.YUV)


def yuv_to_bgr(img: Image) -> Image:
    _require(img, ColorSpace.YUV)
    f = img.data.astype(np.float64)
    y, u, v = f[:, :, 0], f[:, :, 1] - 128.0, f[:, :, 2] - 128.0
    r = y + 1.402 * v
    g = y - 0.344136 * u - 0.714136 * v
    b = y + 1.772 * u
    return Image(np.stack([round_clamp_u8(b), round_clamp_u8(g), round_clamp_u8(r)], axis=2), ColorSpace.BGR)


def bgr_to_hsv(img: Image) -> Image:
    """Hexcone HSV: V = max, S = 255 * (max - min) / max (0 when max is 0),
    H = angle / 2 in [0, 179].  Ties for the maximum resolve in R, G, B
    order when picking the hue sector."""
    _require(img, ColorSpace.BGR)
    b, g, r = _bgr_planes(img)
    v = np.maximum(np.maximum(b, g), r)
    mn = np.minimum(np.minimum(b, g), r)
    delta = v - mn

    safe_delta = np.where(delta == 0.0, 1.0, delta)
    h_deg = np.where(
        delta == 0.0,
        0.0,
        np.where(
            v == r,
            60.0 * (g - b) / safe_delta,
            np.where(
                v == g,
                120.0 + 60.0 * (b - r) / safe_delta,
                240.0 + 60.0 * (r - g) / safe_delta,
            ),
        ),
    )
    h_deg = np.mod(h_deg, 360.0)
    h = np.mod(np.floor(h_deg / 2.0 + 0.5), 180.0).astype(np.uint8)

    safe_v = np.where(v == 0.0, 1.0, v)
    s = np.where(v == 0.0, 0.0, 255.0 * delta / safe_v)
    return Image(np.stack([h, round_clamp_u8(s), round_clamp_u8(v)], axis=2), ColorSpace.HSV)


def hsv_to_bgr(img: Image) -> Image:
    """Inverse hexcone mapping.  Because the stored hue is quantized to
    2-degree steps and S, V to 1/255, a BGR -> HSV -> BGR round trip is
    close to but not exactly the identity."""
    _require(img, ColorSpace.HSV)
    f = img.data.astype(np.float64)
    h_deg = f[:, :, 0] * 2.0
    s = f[:, :, 1] / 255.0
    v = f[:, :, 2]

    sector = h_deg / 60.0
    i = np.floor(sector).astype(np.intp) % 6
    frac = sector - np.floor(sector)
    p = v * (1.0 - s)
    q = v * (1.0 - s * frac)
    t = v * (1.0 - s * (1.0 - frac))

    r = np.choose(i, [v, q, p, p, t, v])
    g = np.choose(i, [t, v, v, q, p, p])
    b = np.choose(i, [p, p, t, v, v, q])
    return Image(np.stack([round_clamp_u8(b), round_clamp_u8(g), round_clamp_u8(r)], axis=2), ColorSpace.BGR)


def extract_channel(img: Image, index: int) -> Image:
    """Pull one plane out as a GRAY image."""
    if not (0 <= index < img.channels):
        raise ImageError(f"channel {index} out of range for {img.channels} channel(s)")
    return Image(img.data[:, :, index].copy(), ColorSpace.GRAY)


def replace_channel(img: Image, index: int, plane: Image) -> Image:
    """Return a copy of `img` with one plane swapped out."""
    if not (0 <= index < img.channels):
        raise ImageError(f"channel {index} out of range for {img.channels} channel(s)")
    _require(plane, ColorSpace.GRAY)
    if plane.width != img.width or plane.height != img.height:
        raise ImageError("replacement plane has a different size")
    out = img.data.copy()
    out[:, :, index] = plane.data[:, :, 0]
    return Image(out, img.color_space)


# ---------------------------------------------------------------------------
# filtering and statistics
# ---------------------------------------------------------------------------

def gaussian_blur_3x3(img: Image) -> Image:
    """Separable 3x3 binomial blur ([1,2,1] outer [1,2,1] / 16) with
    replicated borders, applied per channel, rounded once at the end."""
    src = img.data.astype(np.float64)
    padded = np.pad(src, ((1, 1), (1, 1), (0, 0)), mode="edge")
    horiz = (padded[:, :-2] + 2.0 * padded[:, 1:-1] + padded[:, 2:]) / 4.0
    out = (horiz[:-2] + 2.0 * horiz[1:-1] + horiz[2:]) / 4.0
    return Image(round_clamp_u8(out), img.color_space)


def luminance_stddev(img: Image) -> float:
    """Population standard deviation of the luminance plane: the sole plane
    for GRAY, the Y plane for YUV, and the Y plane of the BT.601 conversion
    for BGR."""
    if img.color_space is ColorSpace.GRAY:
        plane = img.data[:, :, 0]
    elif img.color_space is ColorSpace.YUV:
        plane = img.data[:, :, 0]
    elif img.color_space is ColorSpace.BGR:
        plane = bgr_to_yuv(img).data[:, :, 0]
    else:
        raise WrongColorSpace("luminance is undefined for HSV images here")
    return float(np.std(plane.astype(np.float64)))

"""Image container, netpbm codec, color conversions, blur.

Numeric anchors were computed by hand from the BT.601 full-range and
hexcone formulas before the module was written.
"""

import numpy as np
import pytest

from tsrbench.imgcore import (
    ColorSpace,
    Image,
    MalformedHeader,
    MaxvalNot255,
    TruncatedPayload,
    UnsupportedMagic,
    WrongColorSpace,
    ZeroDimension,
    bgr_to_gray,
    bgr_to_hsv,
    bgr_to_yuv,
    decode_ppm,
    encode_ppm,
    extract_channel,
    gaussian_blur_3x3,
    hsv_to_bgr,
    luminance_stddev,
    replace_channel,
    resize_bilinear,
    round_clamp_u8,
    yuv_to_bgr,
)


def gray(data) -> Image:
    return Image(np.asarray(data, dtype=np.uint8), ColorSpace.GRAY)


def bgr(b, g, r) -> Image:
    return Image(np.array([[[b, g, r]]], dtype=np.uint8), ColorSpace.BGR)


class TestImageContainer:
    def test_gray_is_normalized_to_three_dims(self):
        img = gray([[0, 1], [2, 3]])
        assert img.data.shape == (2, 2, 1)
        assert (img.width, img.height, img.channels) == (2, 2, 1)

    def test_rejects_non_uint8(self):
        with pytest.raises(ValueError):
            Image(np.zeros((2, 2, 3), dtype=np.float32), ColorSpace.BGR)

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            Image(np.zeros((0, 2, 3), dtype=np.uint8), ColorSpace.BGR)

    def test_rejects_channel_count_mismatch(self):
        with pytest.raises(ValueError):
            Image(np.zeros((2, 2, 3), dtype=np.uint8), ColorSpace.GRAY)
        with pytest.raises(ValueError):
            Image(np.zeros((2, 2, 1), dtype=np.uint8), ColorSpace.BGR)

    def test_rejects_out_of_range_hue(self):
        data = np.zeros((1, 1, 3), dtype=np.uint8)
        data[0, 0, 0] = 180
        with pytest.raises(ValueError):
            Image(data, ColorSpace.HSV)


class TestRounding:
    def test_half_rounds_up(self):
        vals = np.array([0.5, 1.5, 2.4, 2.5, -0.4, 254.5, 300.0])
        out = round_clamp_u8(vals)
        assert out.tolist() == [1, 2, 2, 3, 0, 255, 255]
        assert out.dtype == np.uint8


class TestPpmCodec:
    def test_round_trip_color(self):
        rng = np.random.default_rng(0)
        img = Image(rng.integers(0, 256, (5, 7, 3)).astype(np.uint8), ColorSpace.BGR)
        again = decode_ppm(encode_ppm(img))
        assert np.array_equal(again.data, img.data)
        assert again.color_space is ColorSpace.BGR

    def test_round_trip_gray(self):
        img = gray([[0, 128], [255, 7]])
        again = decode_ppm(encode_ppm(img))
        assert np.array_equal(again.data, img.data)
        assert again.color_space is ColorSpace.GRAY

    def test_p6_payload_is_rgb_order(self):
        # one pure-red pixel: BGR (0,0,255) must serialize as bytes R,G,B
        payload = encode_ppm(bgr(0, 0, 255))
        assert payload.endswith(b"\xff\x00\x00")

    def test_decode_known_bytes(self):
        raw = b"P6\n2 1\n255\n" + bytes([255, 0, 0, 0, 255, 0])
        img = decode_ppm(raw)
        assert img.data[0, 0].tolist() == [0, 0, 255]  # red in BGR order
        assert img.data[0, 1].tolist() == [0, 255, 0]

    def test_comments_and_whitespace_in_header(self):
        raw = b"P5 # magic\n# a comment line\n 2\t2 # dims\n255\n" + bytes(4)
        img = decode_ppm(raw)
        assert img.data.shape == (2, 2, 1)

    def test_unsupported_magic(self):
        with pytest.raises(UnsupportedMagic):
            decode_ppm(b"P3\n1 1\n255\n0 0 0")

    def test_malformed_header(self):
        with pytest.raises(MalformedHeader):
            decode_ppm(b"P6\n2 x\n255\n" + bytes(6))

    def test_maxval_must_be_255(self):
        with pytest.raises(MaxvalNot255):
            decode_ppm(b"P6\n1 1\n65535\n" + bytes(6))

    def test_truncated_payload(self):
        with pytest.raises(TruncatedPayload):
            decode_ppm(b"P6\n2 2\n255\n" + bytes(5))

    def test_zero_dimension(self):
        with pytest.raises(ZeroDimension):
            decode_ppm(b"P6\n0 2\n255\n")

    def test_encode_rejects_hsv(self):
        img = Image(np.zeros((1, 1, 3), dtype=np.uint8), ColorSpace.HSV)
        with pytest.raises(WrongColorSpace):
            encode_ppm(img)


class TestResize:
    def test_identity(self):
        img = gray(np.arange(16).reshape(4, 4))
        out = resize_bilinear(img, 4, 4)
        assert np.array_equal(out.data, img.data)

    def test_center_aligned_upscale(self):
        # (j+0.5)/2 - 0.5 over 4 outputs lands at -0.25, 0.25, 0.75, 1.25
        out = resize_bilinear(gray([[0, 255]]), 4, 1)
        assert out.data.ravel().tolist() == [0, 64, 191, 255]

    def test_downscale_averages(self):
        out = resize_bilinear(gray([[0, 100, 200, 300 % 256]]), 2, 1)
        assert out.data.shape == (1, 2, 1)

    def test_constant_stays_constant(self):
        img = Image(np.full((10, 13, 3), 77, np.uint8), ColorSpace.BGR)
        out = resize_bilinear(img, 32, 32)
        assert (out.data == 77).all()

    def test_zero_target_rejected(self):
        with pytest.raises(ZeroDimension):
            resize_bilinear(gray([[1]]), 0, 4)


class TestColorConversions:
    def test_gray_anchors(self):
        # 0.299 R + 0.587 G + 0.114 B, half-up rounding
        assert bgr_to_gray(bgr(0, 0, 255)).data.ravel()[0] == 76
        assert bgr_to_gray(bgr(0, 255, 0)).data.ravel()[0] == 150
        assert bgr_to_gray(bgr(255, 0, 0)).data.ravel()[0] == 29
        assert bgr_to_gray(bgr(255, 255, 255)).data.ravel()[0] == 255

    def test_yuv_anchors(self):
        assert bgr_to_yuv(bgr(0, 0, 255)).data.ravel().tolist() == [76, 85, 255]
        assert bgr_to_yuv(bgr(255, 255, 255)).data.ravel().tolist() == [255, 128, 128]
        assert bgr_to_yuv(bgr(0, 0, 0)).data.ravel().tolist() == [0, 128, 128]

    def test_yuv_achromatic_chroma_is_128(self):
        for v in (0, 1, 50, 127, 128, 200, 255):
            out = bgr_to_yuv(bgr(v, v, v)).data.ravel()
            assert out[0] == v
            assert out[1] == 128 and out[2] == 128

    def test_yuv_round_trip_within_one(self):
        rng = np.random.default_rng(1)
        img = Image(rng.integers(0, 256, (40, 40, 3)).astype(np.uint8), ColorSpace.BGR)
        back = yuv_to_bgr(bgr_to_yuv(img))
        diff = np.abs(back.data.astype(int) - img.data.astype(int))
        assert diff.max() <= 1

    def test_hsv_anchors(self):
        assert bgr_to_hsv(bgr(0, 0, 255)).data.ravel().tolist() == [0, 255, 255]
        assert bgr_to_hsv(bgr(0, 255, 0)).data.ravel().tolist() == [60, 255, 255]
        assert bgr_to_hsv(bgr(255, 0, 0)).data.ravel().tolist() == [120, 255, 255]
        assert bgr_to_hsv(bgr(128, 128, 128)).data.ravel().tolist() == [0, 0, 128]

    def test_hsv_hue_range(self):
        rng = np.random.default_rng(2)
        img = Image(rng.integers(0, 256, (64, 64, 3)).astype(np.uint8), ColorSpace.BGR)
        hsv = bgr_to_hsv(img)
        assert hsv.data[:, :, 0].max() <= 179

    def test_hsv_pure_color_round_trip_exact(self):
        for b, g, r in [(0, 0, 255), (0, 255, 0), (255, 0, 0), (255, 255, 255), (0, 0, 0)]:
            back = hsv_to_bgr(bgr_to_hsv(bgr(b, g, r)))
            assert back.data.ravel().tolist() == [b, g, r]

    def test_conversion_rejects_wrong_space(self):
        img = gray([[1]])
        with pytest.raises(WrongColorSpace):
            bgr_to_yuv(img)
        with pytest.raises(WrongColorSpace):
            bgr_to_hsv(img)


class TestChannels:
    def test_extract_and_replace(self):
        rng = np.random.default_rng(3)
        img = Image(rng.integers(0, 256, (4, 4, 3)).astype(np.uint8), ColorSpace.YUV)
        y = extract_channel(img, 0)
        assert y.color_space is ColorSpace.GRAY
        assert np.array_equal(y.data[:, :, 0], img.data[:, :, 0])
        flipped = replace_channel(img, 0, Image(255 - y.data, ColorSpace.GRAY))
        assert np.array_equal(flipped.data[:, :, 0], 255 - img.data[:, :, 0])
        assert np.array_equal(flipped.data[:, :, 1:], img.data[:, :, 1:])

    def test_extract_bad_index(self):
        img = Image(np.zeros((2, 2, 3), dtype=np.uint8), ColorSpace.BGR)
        with pytest.raises(ValueError):
            extract_channel(img, 3)


class TestBlur:
    def test_impulse_response(self):
        data = np.zeros((5, 5), np.uint8)
        data[2, 2] = 255
        out = gaussian_blur_3x3(gray(data)).data[:, :, 0]
        # separable [1,2,1]/4 kernel: center 4/16, edge 2/16, corner 1/16
        assert out[2, 2] == 64
        assert out[1, 2] == out[3, 2] == out[2, 1] == out[2, 3] == 32
        assert out[1, 1] == out[1, 3] == out[3, 1] == out[3, 3] == 16
        assert out[0, 0] == 0

    def test_constant_preserved(self):
        img = Image(np.full((9, 9, 3), 201, np.uint8), ColorSpace.BGR)
        assert (gaussian_blur_3x3(img).data == 201).all()

    def test_replicated_border(self):
        # a single bright column at the left edge keeps full weight there
        data = np.zeros((3, 4), np.uint8)
        data[:, 0] = 100
        out = gaussian_blur_3x3(gray(data)).data[:, :, 0]
        assert out[1, 0] == 75  # (1+2)*100/4 horizontally


class TestLuminanceStddev:
    def test_constant_image_zero(self):
        assert luminance_stddev(gray(np.full((8, 8), 9, np.uint8))) == 0.0

    def test_two_level_plane(self):
        data = np.zeros((2, 2), np.uint8)
        data[0] = 255
        assert luminance_stddev(gray(data)) == pytest.approx(127.5)

    def test_bgr_uses_luma(self):
        img = Image(np.full((4, 4, 3), 66, np.uint8), ColorSpace.BGR)
        assert luminance_stddev(img) == 0.0

    def test_hsv_rejected(self):
        img = Image(np.zeros((2, 2, 3), dtype=np.uint8), ColorSpace.HSV)
        with pytest.raises(WrongColorSpace):
            luminance_stddev(img)

"""Named preprocessing chains and their composition."""

import numpy as np
import pytest

from tsrbench.enhance import apply_clahe_dynamic, equalize_hist
from tsrbench.hog import hog_descriptor
from tsrbench.imgcore import (
    ColorSpace,
    Image,
    bgr_to_hsv,
    bgr_to_yuv,
    extract_channel,
    gaussian_blur_3x3,
    replace_channel,
)
from tsrbench.pipeline import (
    PIPELINE_ORDER,
    PipelineKind,
    UnknownPipelineName,
    WrongInputSize,
    apply_pipeline,
    hue_equalize,
    pipeline_from_name,
)

NAMES = [
    "HOG",
    "CLAHE-HOG",
    "YUV-HOG",
    "HUE-HOG",
    "CLAHE-YUV-HOG",
    "HUE-YUV-HOG",
    "CLAHE-HUE-YUV-HOG",
]


def random_window(seed=0) -> Image:
    rng = np.random.default_rng(seed)
    return Image(rng.integers(0, 256, (32, 32, 3)).astype(np.uint8), ColorSpace.BGR)


class TestNames:
    def test_order_and_values(self):
        assert [k.value for k in PIPELINE_ORDER] == NAMES
        assert len(PIPELINE_ORDER) == len(set(PIPELINE_ORDER)) == 7

    def test_round_trip(self):
        for kind in PipelineKind:
            assert pipeline_from_name(kind.value) is kind

    def test_unknown_name_lists_choices(self):
        with pytest.raises(UnknownPipelineName) as err:
            pipeline_from_name("SIFT")
        assert "HOG" in str(err.value)


class TestApplyPipeline:
    def test_all_kinds_produce_valid_descriptors(self):
        img = random_window(1)
        for kind in PIPELINE_ORDER:
            d = apply_pipeline(kind, img)
            assert d.shape == (324,)
            assert (d >= 0.0).all() and (d <= 1.0).all()

    def test_wrong_input_size(self):
        small = Image(np.zeros((16, 16, 3), dtype=np.uint8), ColorSpace.BGR)
        with pytest.raises(WrongInputSize):
            apply_pipeline(PipelineKind.HOG, small)

    def test_baseline_is_blur_then_descriptor(self):
        img = random_window(2)
        want = hog_descriptor(gaussian_blur_3x3(img))
        assert np.array_equal(apply_pipeline(PipelineKind.HOG, img), want)

    def test_yuv_chain_composition(self):
        img = random_window(3)
        want = hog_descriptor(gaussian_blur_3x3(bgr_to_yuv(img)))
        assert np.array_equal(apply_pipeline(PipelineKind.YUV_HOG, img), want)

    def test_full_chain_composition(self):
        img = random_window(4)
        staged = bgr_to_yuv(hue_equalize(apply_clahe_dynamic(img)))
        want = hog_descriptor(gaussian_blur_3x3(staged))
        got = apply_pipeline(PipelineKind.CLAHE_HUE_YUV_HOG, img)
        assert np.array_equal(got, want)

    def test_achromatic_image_yuv_equals_baseline(self):
        # for gray-valued pixels the Y plane carries the same gradients the
        # BGR max-channel rule picks, and U=V=128 contribute none
        rng = np.random.default_rng(5)
        plane = rng.integers(0, 256, (32, 32)).astype(np.uint8)
        img = Image(np.repeat(plane[:, :, None], 3, axis=2), ColorSpace.BGR)
        base = apply_pipeline(PipelineKind.HOG, img)
        yuv = apply_pipeline(PipelineKind.YUV_HOG, img)
        assert np.array_equal(base, yuv)

    def test_pipelines_differ_on_colorful_input(self):
        img = random_window(6)
        outs = [apply_pipeline(kind, img) for kind in PIPELINE_ORDER]
        for i in range(len(outs)):
            for j in range(i + 1, len(outs)):
                assert not np.array_equal(outs[i], outs[j]), (i, j)


class TestHueEqualize:
    def test_keeps_saturation_and_value(self):
        img = random_window(7)
        before = bgr_to_hsv(img).data
        after = bgr_to_hsv(hue_equalize(img)).data
        # S and V planes survive; hue is remapped
        assert np.array_equal(after[:, :, 2], before[:, :, 2])
        assert np.abs(after[:, :, 1].astype(int) - before[:, :, 1].astype(int)).max() <= 1

    def test_hue_plane_is_equalized_and_wrapped(self):
        img = random_window(8)
        hsv = bgr_to_hsv(img)
        h = extract_channel(hsv, 0)
        expected = equalize_hist(h).data[:, :, 0].astype(int) % 180
        got = bgr_to_hsv(hue_equalize(img)).data[:, :, 0].astype(int)
        diff = np.abs(got - expected)
        circular = np.minimum(diff, 180 - diff)
        # hue resolution through 8-bit BGR is limited by the max-min channel
        # spread; below a spread of 16 the recovered angle is ill-conditioned
        s = hsv.data[:, :, 1].astype(int)
        v = hsv.data[:, :, 2].astype(int)
        spread = s * v // 255
        assert circular[spread >= 16].max() <= 1
        assert circular[spread >= 64].max() == 0

    def test_output_is_bgr(self):
        assert hue_equalize(random_window(9)).color_space is ColorSpace.BGR

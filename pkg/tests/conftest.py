"""Shared fixtures: a small synthetic dataset tree in the GTSRB layout.

Class appearance is driven by simple geometry (disc, stripes, diagonal
band) so a classifier trained on HOG features can actually separate the
classes; sizes vary so the resize path is exercised.
"""

from __future__ import annotations

import os

import numpy as np
import pytest

from tsrbench.imgcore import ColorSpace, Image, encode_ppm

CSV_HEADER = "Filename;Width;Height;Roi.X1;Roi.Y1;Roi.X2;Roi.Y2;ClassId"


def make_sign_image(rng: np.random.Generator, class_id: int, size: int) -> Image:
    img = rng.integers(0, 40, (size, size, 3)).astype(np.uint8)
    yy, xx = np.mgrid[0:size, 0:size]
    if class_id % 4 == 0:
        mask = (yy - size / 2) ** 2 + (xx - size / 2) ** 2 < (size / 3) ** 2
    elif class_id % 4 == 1:
        mask = (yy // 4) % 2 == 0
    elif class_id % 4 == 2:
        mask = (xx // 4) % 2 == 0
    else:
        mask = abs(yy - xx) < size // 5
    img[mask] = [60, 180, 230]
    return Image(img, ColorSpace.BGR)


def write_gtsrb_tree(
    root: str,
    seed: int = 11,
    n_classes: int = 4,
    per_class: int = 14,
    n_test: int = 24,
) -> str:
    rng = np.random.default_rng(seed)
    train = os.path.join(root, "training")
    for c in range(n_classes):
        d = os.path.join(train, f"{c:05d}")
        os.makedirs(d)
        lines = [CSV_HEADER]
        for i in range(per_class):
            size = int(rng.integers(24, 48))
            name = f"{i:05d}_00000.ppm"
            with open(os.path.join(d, name), "wb") as f:
                f.write(encode_ppm(make_sign_image(rng, c, size)))
            lines.append(f"{name};{size};{size};2;2;{size - 2};{size - 2};{c}")
        with open(os.path.join(d, f"GT-{c:05d}.csv"), "w") as f:
            f.write("\n".join(lines) + "\n")
    test = os.path.join(root, "test")
    os.makedirs(test)
    lines = [CSV_HEADER]
    for i in range(n_test):
        c = i % n_classes
        size = int(rng.integers(24, 48))
        name = f"{i:05d}.ppm"
        with open(os.path.join(test, name), "wb") as f:
            f.write(encode_ppm(make_sign_image(rng, c, size)))
        lines.append(f"{name};{size};{size};2;2;{size - 2};{size - 2};{c}")
    with open(os.path.join(test, "GT-final_test.csv"), "w") as f:
        f.write("\n".join(lines) + "\n")
    return root


@pytest.fixture(scope="session")
def data_root(tmp_path_factory) -> str:
    return write_gtsrb_tree(str(tmp_path_factory.mktemp("gtsrb")))


@pytest.fixture(scope="session")
def feature_caches(data_root, tmp_path_factory) -> dict[str, str]:
    """HOG caches for the synthetic tree, shared by train/eval/CLI tests."""
    from tsrbench.pipeline import PipelineKind
    from tsrbench.workflows import cmd_features

    stem = str(tmp_path_factory.mktemp("caches") / "feat")
    result = cmd_features(data_root, PipelineKind.HOG, 0, stem)
    return {
        "train": result.train_path,
        "val": result.val_path,
        "test": result.test_path,
    }


@pytest.fixture(scope="session")
def trained_model_path(feature_caches, tmp_path_factory) -> str:
    from tsrbench.workflows import cmd_train

    path = str(tmp_path_factory.mktemp("models") / "synthetic.tsrm")
    cmd_train(feature_caches["train"], c=5.0, gamma=0.3, out_model=path)
    return path

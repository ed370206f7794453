"""Two-stage randomized hyperparameter search with k-fold cross-validation.

Stage 1 samples a wide box (0.5 < C < 50, 0.01 < gamma < 1) under 5-fold
validation; stage 2 samples a fixed narrow box (5 < C < 25,
0.05 < gamma < 0.35) under 3-fold validation and its winner is the final
answer.  C is drawn uniformly, gamma log-uniformly; 10 draws per axis form
a grid of which 10 distinct cells are evaluated.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .dataset import TooFewSamples
from .rng import Xorshift64Star
from .svm import TrainConfig, predict_batch, train_multiclass

STAGE1_C_RANGE = (0.5, 50.0)
STAGE1_GAMMA_RANGE = (0.01, 1.0)
STAGE2_C_RANGE = (5.0, 25.0)
STAGE2_GAMMA_RANGE = (0.05, 0.35)

# Called with (c, gamma, score) after each candidate evaluation.
CandidateHook = Callable[[float, float, float], None]


@dataclass(frozen=True)
class SearchStage:
    c_range: tuple[float, float]
    gamma_range: tuple[float, float]
    samples_per_axis: int = 10
    iterations: int = 10
    folds: int = 5
    seed: int = 0

    def __post_init__(self):
        for low, high in (self.c_range, self.gamma_range):
            if not low < high:
                raise ValueError("range bounds must satisfy low < high")
        if self.folds < 2:
            raise ValueError("need at least 2 folds")
        if self.samples_per_axis < 1 or self.iterations < 1:
            raise ValueError("samples_per_axis and iterations must be positive")
        if self.iterations > self.samples_per_axis ** 2:
            raise ValueError("cannot evaluate more candidates than grid cells")


def kfold_indices(n: int, k: int, seed: int) -> list[np.ndarray]:
    """Shuffle 0..n-1 with the seeded PRNG and slice into k folds whose
    sizes differ by at most one (the first n mod k folds are larger)."""
    if k < 2:
        raise ValueError("need at least 2 folds")
    if n < k:
        raise TooFewSamples(f"cannot make {k} folds from {n} samples")
    order = list(range(n))
    Xorshift64Star(seed).shuffle(order)
    base, extra = divmod(n, k)
    folds: list[np.ndarray] = []
    start = 0
    for i in range(k):
        size = base + (1 if i < extra else 0)
        folds.append(np.asarray(order[start : start + size], dtype=np.intp))
        start += size
    return folds


def cv_score(
    features: np.ndarray,
    labels: np.ndarray,
    c: float,
    gamma: float,
    k: int,
    seed: int,
) -> float:
    """Mean held-out accuracy over k folds at one (c, gamma) point."""
    x = np.ascontiguousarray(features, dtype=np.float64)
    y = np.asarray(labels).ravel().astype(np.int64)
    folds = kfold_indices(len(x), k, seed)
    cfg = TrainConfig(c=c, gamma=gamma)
    accuracies = []
    for held_out in folds:
        mask = np.ones(len(x), dtype=bool)
        mask[held_out] = False
        model = train_multiclass(x[mask], y[mask], cfg)
        predicted = predict_batch(model, x[held_out])
        accuracies.append(float(np.mean(predicted == y[held_out])))
    return float(np.mean(accuracies))


def random_search(
    features: np.ndarray,
    labels: np.ndarray,
    stage: SearchStage,
    on_candidate: CandidateHook | None = None,
) -> tuple[float, float, float]:
    """Evaluate `iterations` distinct cells of the draw grid and return the
    best (c, gamma, score); score ties go to smaller c, then smaller gamma.

    The stage stream is consumed in a fixed order: fold seed first, then
    the C draws, then the gamma draws, then the cell choices — so the
    folds behind the returned score can be reproduced from stage.seed.
    """
    rng = Xorshift64Star(stage.seed)
    fold_seed = rng.next_u64()
    c_values = [rng.uniform(*stage.c_range) for _ in range(stage.samples_per_axis)]
    gamma_values = [
        rng.log_uniform(*stage.gamma_range) for _ in range(stage.samples_per_axis)
    ]
    cells = rng.sample_indices(stage.samples_per_axis ** 2, stage.iterations)

    best: tuple[float, float, float] | None = None
    for cell in cells:
        c = c_values[cell // stage.samples_per_axis]
        gamma = gamma_values[cell % stage.samples_per_axis]
        score = cv_score(features, labels, c, gamma, stage.folds, fold_seed)
        if on_candidate is not None:
            on_candidate(c, gamma, score)
        if (
            best is None
            or score > best[2]
            or (score == best[2] and (c, gamma) < (best[0], best[1]))
        ):
            best = (c, gamma, score)
    assert best is not None  # iterations >= 1 by SearchStage invariant
    return best


def two_stage_search(
    features: np.ndarray,
    labels: np.ndarray,
    seed: int,
    on_candidate: Callable[[int, float, float, float], None] | None = None,
) -> tuple[float, float]:
    """Both stages back to back; returns stage 2's winning (c, gamma).
    Stage seeds derive from the master seed; stage 2's search box is fixed,
    not centered on stage 1's winner."""
    rng = Xorshift64Star(seed)
    seed1, seed2 = rng.next_u64(), rng.next_u64()
    stages = (
        SearchStage(STAGE1_C_RANGE, STAGE1_GAMMA_RANGE, folds=5, seed=seed1),
        SearchStage(STAGE2_C_RANGE, STAGE2_GAMMA_RANGE, folds=3, seed=seed2),
    )
    result = None
    for number, stage in enumerate(stages, start=1):
        hook = None
        if on_candidate is not None:
            hook = lambda c, g, s, _n=number: on_candidate(_n, c, g, s)
        result = random_search(features, labels, stage, hook)
    return result[0], result[1]

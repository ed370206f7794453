"""RBF-kernel support vector machine.

Binary problems are solved by sequential minimal optimization with a
fully deterministic working-pair heuristic (no randomness anywhere), so
identical inputs give bit-identical models.  Multiclass is one-vs-one:
one binary model per unordered class pair, combined by majority vote.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .binio import ByteWriter, open_checked

DEFAULT_C = 20.5557
DEFAULT_GAMMA = 0.2167
SV_THRESHOLD = 1e-8

MODEL_MAGIC = b"TSRM"
MODEL_VERSION = 1


class SvmError(ValueError):
    pass


class DimensionMismatch(SvmError):
    pass


class SingleClassInput(SvmError):
    pass


class FewerThanTwoClasses(SvmError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    c: float = DEFAULT_C
    gamma: float = DEFAULT_GAMMA
    tol: float = 1e-3
    max_passes: int = 5
    max_iters: int | None = None  # sweep cap; None resolves to 10 * n per binary problem

    def __post_init__(self):
        if self.c <= 0 or self.gamma <= 0 or self.tol <= 0:
            raise ValueError("c, gamma and tol must be positive")
        if self.max_passes < 1:
            raise ValueError("max_passes must be at least 1")
        if self.max_iters is not None and self.max_iters < 1:
            raise ValueError("max_iters must be at least 1 when given")


@dataclass
class BinaryModel:
    """support_vectors are float32 (the on-disk precision) so a model and
    its save/load round trip compare equal field-for-field; dual_coeffs
    hold alpha_i * y_i for the retained vectors."""

    support_vectors: np.ndarray  # (m, dim) float32
    dual_coeffs: np.ndarray      # (m,) float64
    bias: float
    gamma: float
    converged: bool = True


@dataclass
class MulticlassSvmModel:
    classes: list[int]  # sorted ascending
    pairs: list[tuple[int, int, BinaryModel]]  # class_a < class_b
    train_config: TrainConfig


def rbf_kernel(x: np.ndarray, y: np.ndarray, gamma: float) -> float:
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise DimensionMismatch(f"kernel arguments of dim {x.size} vs {y.size}")
    diff = x - y
    return float(np.exp(-gamma * np.dot(diff, diff)))


def rbf_gram(x: np.ndarray, y: np.ndarray, gamma: float) -> np.ndarray:
    """Kernel matrix K[i, j] = exp(-gamma * |x_i - y_j|^2) via the expanded
    square, clipped at zero against rounding.  When both sides are the same
    array the result is symmetrized exactly and the diagonal forced to 1."""
    self_gram = y is x
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = x if self_gram else np.ascontiguousarray(y, dtype=np.float64)
    xx = np.einsum("ij,ij->i", x, x)
    yy = xx if self_gram else np.einsum("ij,ij->i", y, y)
    sq = xx[:, None] + yy[None, :] - 2.0 * (x @ y.T)
    np.maximum(sq, 0.0, out=sq)
    gram = np.exp(-gamma * sq)
    if self_gram:
        gram = (gram + gram.T) / 2.0
        np.fill_diagonal(gram, 1.0)
    return gram


class _SmoState:
    """One binary problem mid-solve: multipliers, bias and the error cache
    E_i = f(x_i) - y_i, updated incrementally after every step."""

    def __init__(self, gram: np.ndarray, y: np.ndarray, cfg: TrainConfig):
        self.gram = gram
        self.y = y
        self.cfg = cfg
        self.n = len(y)
        self.alpha = np.zeros(self.n)
        self.bias = 0.0
        self.errors = -y.astype(np.float64)  # f is identically 0 at the start
        self.steps = 0

    def _second_choices(self, i: int):
        """Candidate j order: first the non-bound point maximizing
        |E_i - E_j| (lowest index on ties), then the remaining non-bound
        points cyclically from i+1, then all other points the same way.
        Lazy: the fallback scans are only materialized when the best-gap
        candidate fails to move, which is rare."""
        c = self.cfg.c
        non_bound = np.flatnonzero((self.alpha > 0.0) & (self.alpha < c))
        first = -1
        if non_bound.size:
            gaps = np.abs(self.errors[i] - self.errors[non_bound])
            first = int(non_bound[np.argmax(gaps)])
            if first != i:
                yield first
        cyclic = np.concatenate([np.arange(i + 1, self.n), np.arange(i)])
        nb_mask = np.zeros(self.n, dtype=bool)
        nb_mask[non_bound] = True
        for j in cyclic[nb_mask[cyclic]]:
            if j != first:
                yield int(j)
        for j in cyclic[~nb_mask[cyclic]]:
            if j != first:
                yield int(j)

    def _take_step(self, i: int, j: int) -> float:
        """Joint optimization of (alpha_i, alpha_j).  Returns |delta alpha_j|
        actually applied (0.0 means no move)."""
        alpha, y, gram, c = self.alpha, self.y, self.gram, self.cfg.c
        yi, yj = y[i], y[j]
        ai_old, aj_old = alpha[i], alpha[j]
        ei, ej = self.errors[i], self.errors[j]
        s = yi * yj

        if s < 0:
            low = max(0.0, aj_old - ai_old)
            high = min(c, c + aj_old - ai_old)
        else:
            low = max(0.0, ai_old + aj_old - c)
            high = min(c, ai_old + aj_old)
        if low >= high:
            return 0.0

        kii, kjj, kij = gram[i, i], gram[j, j], gram[i, j]
        eta = kii + kjj - 2.0 * kij
        if eta > 0.0:
            aj_new = aj_old + yj * (ei - ej) / eta
            aj_new = min(max(aj_new, low), high)
        else:
            # Flat or concave direction: compare the objective at both ends.
            f1 = yi * (ei + self.bias) - ai_old * kii - s * aj_old * kij
            f2 = yj * (ej + self.bias) - aj_old * kjj - s * ai_old * kij
            l1 = ai_old + s * (aj_old - low)
            h1 = ai_old + s * (aj_old - high)
            obj_low = (
                l1 * f1 + low * f2
                + 0.5 * l1 * l1 * kii + 0.5 * low * low * kjj + s * low * l1 * kij
            )
            obj_high = (
                h1 * f1 + high * f2
                + 0.5 * h1 * h1 * kii + 0.5 * high * high * kjj + s * high * h1 * kij
            )
            if obj_low < obj_high - 1e-12:
                aj_new = low
            elif obj_low > obj_high + 1e-12:
                aj_new = high
            else:
                return 0.0

        # Snap to exact bounds: alpha values a rounding error away from 0
        # or C would otherwise keep passing the movability tests forever.
        snap = 1e-10 * max(1.0, c)
        if aj_new < snap:
            aj_new = 0.0
        elif aj_new > c - snap:
            aj_new = c
        delta_j = aj_new - aj_old
        if abs(delta_j) < 1e-12:
            return 0.0
        ai_new = ai_old + s * (aj_old - aj_new)
        if ai_new < snap:
            ai_new = 0.0
        elif ai_new > c - snap:
            ai_new = c
        delta_i = ai_new - ai_old

        b_old = self.bias
        b1 = b_old - ei - yi * delta_i * kii - yj * delta_j * kij
        b2 = b_old - ej - yi * delta_i * kij - yj * delta_j * kjj
        if 0.0 < ai_new < c:
            self.bias = b1
        elif 0.0 < aj_new < c:
            self.bias = b2
        else:
            self.bias = (b1 + b2) / 2.0

        alpha[i] = ai_new
        alpha[j] = aj_new
        self.errors += (
            yi * delta_i * gram[i]
            + yj * delta_j * gram[j]
            + (self.bias - b_old)
        )
        self.steps += 1
        return abs(delta_j)

    def examine(self, i: int) -> float:
        """If point i violates its KKT condition beyond tol, try second
        choices in deterministic order until one moves.  Returns the size
        of the applied alpha_j change (0.0 if none)."""
        tol, c = self.cfg.tol, self.cfg.c
        r = self.errors[i] * self.y[i]
        if not ((r < -tol and self.alpha[i] < c) or (r > tol and self.alpha[i] > 0.0)):
            return 0.0
        for j in self._second_choices(i):
            moved = self._take_step(i, j)
            if moved > 0.0:
                return moved
        return 0.0

    def kkt_violation(self) -> float:
        """Largest violation of the three KKT clauses on the training set,
        measured through r_i = y_i * f(x_i) - 1."""
        r = self.errors * self.y
        lower = np.where(self.alpha < self.cfg.c, np.maximum(0.0, -r), 0.0)
        upper = np.where(self.alpha > 0.0, np.maximum(0.0, r), 0.0)
        return float(np.maximum(lower, upper).max())

    def _bias_sets(self) -> tuple[np.ndarray, np.ndarray]:
        c = self.cfg.c
        lower = ((self.alpha < c) & (self.y > 0)) | ((self.alpha > 0.0) & (self.y < 0))
        upper = ((self.alpha < c) & (self.y < 0)) | ((self.alpha > 0.0) & (self.y > 0))
        return lower, upper

    def violating_pair(self) -> tuple[float, int, int]:
        """Bias-independent optimality gap and the pair realizing it.

        The per-point check in examine() sees the problem through the
        stored bias; a miscentred bias can hide the one pair that could
        still make progress while flagging points that cannot.  Each point
        constrains the feasible bias from one side through
        g_i = y_i - u_i (u is the decision value without bias); the dual is
        optimal exactly when max(lower g) <= min(upper g).
        """
        g = self.bias - self.errors
        lower, upper = self._bias_sets()
        if not lower.any() or not upper.any():
            return 0.0, -1, -1
        lo_vals = np.where(lower, g, -np.inf)
        up_vals = np.where(upper, g, np.inf)
        i_lo = int(np.argmax(lo_vals))
        i_up = int(np.argmin(up_vals))
        return float(lo_vals[i_lo] - up_vals[i_up]), i_lo, i_up

    def recentre_bias(self) -> None:
        """Move the bias to the midpoint of its KKT-feasible interval so the
        final per-point violations are at most half the pair gap."""
        g = self.bias - self.errors
        lower, upper = self._bias_sets()
        if not lower.any() and not upper.any():
            return
        b_lo = float(g[lower].max()) if lower.any() else float(g[upper].min())
        b_up = float(g[upper].min()) if upper.any() else b_lo
        target = 0.5 * (b_lo + b_up)
        self.errors += target - self.bias
        self.bias = target


def smo_train(
    features: np.ndarray, labels: np.ndarray, cfg: TrainConfig = TrainConfig()
) -> BinaryModel:
    """Train one soft-margin binary SVM.

    Full sweeps over all points run until either max_passes consecutive
    sweeps change no multiplier by more than cfg.tol, or the sweep budget
    (cfg.max_iters, default 10n) is exhausted.  In the latter case, if KKT
    violations above 10 * tol remain, the model is returned with
    converged=False rather than raising: it is still usable, just flagged.
    """
    x = np.ascontiguousarray(features, dtype=np.float64)
    if x.ndim != 2:
        raise DimensionMismatch(f"expected a 2-d feature array, got {x.ndim}-d")
    y = np.asarray(labels, dtype=np.float64).ravel()
    if len(y) != len(x):
        raise DimensionMismatch(f"{len(x)} feature rows vs {len(y)} labels")
    signs = set(np.unique(y))
    if not signs <= {-1.0, 1.0}:
        raise SvmError(f"labels must be +1/-1, got {sorted(signs)}")
    if len(signs) < 2:
        raise SingleClassInput("need at least one example of each sign")

    state = _SmoState(rbf_gram(x, x, cfg.gamma), y, cfg)
    max_iters = cfg.max_iters if cfg.max_iters is not None else 10 * len(y)

    quiet_sweeps = 0
    sweeps = 0
    while quiet_sweeps < cfg.max_passes and sweeps < max_iters:
        sweeps += 1
        largest = 0.0
        for i in range(state.n):
            largest = max(largest, state.examine(i))
        # Polish the free set between full sweeps; a single pass per sweep
        # zigzags badly on correlated kernels.
        for _ in range(50):
            free = np.flatnonzero((state.alpha > 0.0) & (state.alpha < cfg.c))
            inner = 0.0
            for i in free:
                inner = max(inner, state.examine(int(i)))
            largest = max(largest, inner)
            if inner <= cfg.tol:
                break
        if largest <= cfg.tol:
            # A quiet sweep is only trustworthy when the bias-independent
            # gap agrees; otherwise keep stepping on the worst pair.  The
            # target sits well under tol so the dual objective lands tight,
            # not just the KKT clauses.
            for _ in range(100 * state.n):
                gap, i_lo, i_up = state.violating_pair()
                if gap <= 0.25 * cfg.tol:
                    break
                moved = state._take_step(i_lo, i_up)
                largest = max(largest, moved)
                if moved < 1e-12:
                    break
        quiet_sweeps = quiet_sweeps + 1 if largest <= cfg.tol else 0

    state.recentre_bias()
    converged = not (
        sweeps >= max_iters and state.kkt_violation() > 10.0 * cfg.tol
    )

    keep = state.alpha > SV_THRESHOLD
    return BinaryModel(
        support_vectors=x[keep].astype(np.float32),
        dual_coeffs=state.alpha[keep] * y[keep],
        bias=float(state.bias),
        gamma=cfg.gamma,
        converged=converged,
    )


def dual_objective(model: BinaryModel) -> float:
    """Value of the dual objective at the model's multipliers:
    sum(alpha) - 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij.  Multipliers
    below the support threshold were dropped; their contribution is
    bounded by n * 1e-8."""
    coeffs = model.dual_coeffs
    sv = model.support_vectors.astype(np.float64)
    gram = rbf_gram(sv, sv, model.gamma)
    return float(np.abs(coeffs).sum() - 0.5 * coeffs @ gram @ coeffs)


def decision_value(model: BinaryModel, x: np.ndarray) -> float:
    x = np.asarray(x, dtype=np.float64).ravel()
    sv = model.support_vectors.astype(np.float64)
    if x.size != sv.shape[1]:
        raise DimensionMismatch(f"probe dim {x.size} vs support dim {sv.shape[1]}")
    row = rbf_gram(x[None, :], sv, model.gamma)[0]
    return float(row @ model.dual_coeffs + model.bias)


def train_multiclass(
    features: np.ndarray, labels: np.ndarray, cfg: TrainConfig = TrainConfig()
) -> MulticlassSvmModel:
    """One binary model per unordered class pair, trained on just that
    pair's samples with the lower class id mapped to +1.  Pairs are
    independent, so their training order cannot affect results."""
    x = np.ascontiguousarray(features, dtype=np.float64)
    y = np.asarray(labels).ravel().astype(np.int64)
    if len(x) != len(y):
        raise DimensionMismatch(f"{len(x)} feature rows vs {len(y)} labels")
    classes = sorted(int(c) for c in np.unique(y))
    if len(classes) < 2:
        raise FewerThanTwoClasses(f"need at least 2 classes, got {len(classes)}")

    pairs: list[tuple[int, int, BinaryModel]] = []
    for ia, a in enumerate(classes):
        for b in classes[ia + 1 :]:
            mask = (y == a) | (y == b)
            signs = np.where(y[mask] == a, 1.0, -1.0)
            try:
                binary = smo_train(x[mask], signs, cfg)
            except SvmError as exc:
                raise type(exc)(f"pair ({a}, {b}): {exc}") from exc
            pairs.append((a, b, binary))
    return MulticlassSvmModel(classes=classes, pairs=pairs, train_config=cfg)


def _pair_decisions(
    model: MulticlassSvmModel, x: np.ndarray, chunk_rows: int = 1024
) -> np.ndarray:
    """Decision values for every (sample, pair), shape (n, n_pairs).

    Support vectors recur across pairs (each training point can serve many
    pairs), so the kernel block against the unique vectors is computed once
    per row chunk and pair decisions are gathers plus small mat-vecs.
    """
    stacked = np.vstack([pair[2].support_vectors for pair in model.pairs])
    unique, inverse = np.unique(stacked, axis=0, return_inverse=True)
    inverse = inverse.ravel()
    unique = unique.astype(np.float64)

    columns: list[np.ndarray] = []
    offset = 0
    for _, _, binary in model.pairs:
        m = len(binary.support_vectors)
        columns.append(inverse[offset : offset + m])
        offset += m

    gamma = model.train_config.gamma
    out = np.empty((len(x), len(model.pairs)))
    for start in range(0, len(x), chunk_rows):
        rows = x[start : start + chunk_rows]
        kernel = rbf_gram(rows, unique, gamma)
        for p, (_, _, binary) in enumerate(model.pairs):
            out[start : start + len(rows), p] = (
                kernel[:, columns[p]] @ binary.dual_coeffs + binary.bias
            )
    return out


def predict_batch(model: MulticlassSvmModel, features: np.ndarray) -> np.ndarray:
    """Vote over all pairs for each row.  Ties go to the tied class with
    the largest sum of |decision value| over the pairs it won, then to the
    lowest class id."""
    x = np.ascontiguousarray(features, dtype=np.float64)
    if x.ndim != 2:
        raise DimensionMismatch(f"expected a 2-d feature array, got {x.ndim}-d")
    dim = model.pairs[0][2].support_vectors.shape[1]
    if x.shape[1] != dim:
        raise DimensionMismatch(f"feature dim {x.shape[1]} vs model dim {dim}")

    classes = np.asarray(model.classes)
    index_of = {c: i for i, c in enumerate(model.classes)}
    decisions = _pair_decisions(model, x)

    votes = np.zeros((len(x), len(classes)), dtype=np.int64)
    margins = np.zeros((len(x), len(classes)))
    for p, (a, b, _) in enumerate(model.pairs):
        d = decisions[:, p]
        a_wins = d > 0.0
        ia, ib = index_of[a], index_of[b]
        votes[a_wins, ia] += 1
        votes[~a_wins, ib] += 1
        margins[a_wins, ia] += np.abs(d[a_wins])
        margins[~a_wins, ib] += np.abs(d[~a_wins])

    tied = votes == votes.max(axis=1, keepdims=True)
    tied_margins = np.where(tied, margins, -np.inf)
    best = tied & (tied_margins == tied_margins.max(axis=1, keepdims=True))
    # argmax picks the first remaining True, i.e. the lowest class id
    return classes[np.argmax(best, axis=1)]


def predict(model: MulticlassSvmModel, x: np.ndarray) -> int:
    x = np.asarray(x, dtype=np.float64).ravel()
    return int(predict_batch(model, x[None, :])[0])


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

def save_model(model: MulticlassSvmModel, path) -> None:
    """Write the TSRM v1 format; see the reader below for the layout.
    Solver-only knobs (tol, max_passes, max_iters) are not persisted."""
    w = ByteWriter()
    w.raw(MODEL_MAGIC)
    w.u32(MODEL_VERSION)
    w.f64(model.train_config.gamma)
    w.f64(model.train_config.c)
    w.u32(len(model.classes))
    for c in model.classes:
        w.u32(c)
    w.u32(len(model.pairs))
    for a, b, binary in model.pairs:
        sv = binary.support_vectors
        w.u32(a)
        w.u32(b)
        w.u32(sv.shape[0])
        w.u32(sv.shape[1])
        w.f64(binary.bias)
        w.f64_array(binary.dual_coeffs)
        w.f32_array(sv)
    with open(path, "wb") as fh:
        fh.write(w.finish())


def load_model(path) -> MulticlassSvmModel:
    with open(path, "rb") as fh:
        data = fh.read()
    r = open_checked(data, MODEL_MAGIC, MODEL_VERSION)
    gamma = r.f64()
    c = r.f64()
    classes = [r.u32() for _ in range(r.u32())]
    n_pairs = r.u32()
    pairs: list[tuple[int, int, BinaryModel]] = []
    for _ in range(n_pairs):
        a = r.u32()
        b = r.u32()
        sv_count = r.u32()
        dim = r.u32()
        bias = r.f64()
        coeffs = r.f64_array(sv_count)
        sv = r.f32_array(sv_count * dim).reshape(sv_count, dim)
        pairs.append((a, b, BinaryModel(sv, coeffs, bias, gamma)))
    return MulticlassSvmModel(
        classes=classes, pairs=pairs, train_config=TrainConfig(c=c, gamma=gamma)
    )

"""Linear SVM with hinge loss and an unregularized bias, plus one-vs-rest
multi-label training and prediction.

The trainer minimizes

    P(w, b) = 0.5 * ||w||^2 + C * sum_i max(0, 1 - y_i (w . x_i + b))

by exact pairwise coordinate steps on the dual (maximal-violating-pair
selection), keeping the equality constraint from the unregularized bias.
The bias is recovered by exact one-dimensional minimization of the hinge
sum, and the duality gap certifies how far the incumbent is from the
optimum. The procedure is deterministic: no randomness is consumed.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .features import SparseVector

logger = logging.getLogger(__name__)

_KKT_EPS = 1e-8
_GRAM_LIMIT = 2048  # precompute the Gram matrix up to this many points


@dataclass
class TrainConfig:
    c: float = 1.0
    tolerance: float = 1e-4  # relative duality-gap threshold
    max_epochs: int = 1000
    seed: int = 0


@dataclass
class LinearModel:
    weights: np.ndarray
    bias: float
    objective: float | None = None
    objective_history: list[float] = field(default_factory=list)

    def decision(self, x: SparseVector) -> float:
        w = self.weights
        dim = w.shape[0]
        total = self.bias
        for i, v in zip(x.indices, x.values):
            if i < dim:
                total += w[i] * v
        return float(total)


class PredictionMode:
    MULTI_LABEL = "multi_label"
    SINGLE_LABEL = "single_label"


def _to_csr(X: list[SparseVector], dim: int) -> sp.csr_matrix:
    indptr = [0]
    indices: list[int] = []
    data: list[float] = []
    for x in X:
        indices.extend(x.indices)
        data.extend(x.values)
        indptr.append(len(indices))
    return sp.csr_matrix(
        (np.array(data, dtype=np.float64),
         np.array(indices, dtype=np.int64),
         np.array(indptr, dtype=np.int64)),
        shape=(len(X), dim),
    )


def infer_dim(X: list[SparseVector]) -> int:
    return max((x.indices[-1] + 1 for x in X if x.indices), default=0)


def _best_bias(f: np.ndarray, ya: np.ndarray) -> float:
    # hinge sum over b is piecewise linear with breakpoints y_i - f_i and
    # slope rising by one hinge per breakpoint; the minimum sits at the
    # (number of positives)-th smallest breakpoint
    bps = np.sort(ya - f)
    n_pos = int(np.sum(ya > 0))
    return float(bps[n_pos - 1])


def _primal(f: np.ndarray, ya: np.ndarray, b: float, wsq: float, c: float) -> float:
    margins = ya * (f + b)
    return 0.5 * wsq + c * float(np.maximum(0.0, 1.0 - margins).sum())


def train_binary_svm(
    X: list[SparseVector],
    y: list[int],
    cfg: TrainConfig | None = None,
    dim: int | None = None,
) -> LinearModel:
    """Train one binary classifier; labels must be +1 or -1.

    Single-class input degenerates to a zero weight vector with the class
    sign as bias (and a warning). Otherwise the returned model's primal
    objective is duality-gap certified to within ``cfg.tolerance``
    relative of the optimum.
    """
    cfg = cfg or TrainConfig()
    if not X or len(X) != len(y):
        raise ValueError("X and y must be non-empty and the same length")
    if any(label not in (-1, 1) for label in y):
        raise ValueError("labels must be +1 or -1")
    if dim is None:
        dim = infer_dim(X)

    classes = set(y)
    if len(classes) == 1:
        sole = y[0]
        logger.warning("single-class training set; returning constant model %+d", sole)
        return LinearModel(weights=np.zeros(dim), bias=float(sole),
                           objective=0.0, objective_history=[0.0])

    n = len(X)
    c = float(cfg.c)
    Xs = _to_csr(X, dim)
    ya = np.asarray(y, dtype=np.float64)

    gram = (Xs @ Xs.T).toarray() if n <= _GRAM_LIMIT else None
    diag = np.asarray(Xs.multiply(Xs).sum(axis=1)).ravel()
    snap = 1e-12 * max(1.0, c)

    def gram_row(i: int) -> np.ndarray:
        if gram is not None:
            return gram[i]
        return np.asarray((Xs @ Xs.getrow(i).T).todense()).ravel()

    alpha = np.zeros(n)
    f = np.zeros(n)  # f_i = w . x_i, maintained incrementally

    pos_mask = ya > 0
    neg_mask = ~pos_mask

    best = {"P": math.inf, "alpha": alpha.copy(), "b": 0.0}
    history: list[float] = []
    converged = False

    for _epoch in range(cfg.max_epochs):
        moved = False
        for _ in range(n):
            F = ya - f
            up = (pos_mask & (alpha < c)) | (neg_mask & (alpha > 0))
            low = (pos_mask & (alpha > 0)) | (neg_mask & (alpha < c))
            if not up.any() or not low.any():
                converged = True
                break
            i = int(np.where(up, F, -np.inf).argmax())
            m_low = float(np.where(low, F, np.inf).min())
            if F[i] - m_low <= _KKT_EPS:
                converged = True
                break

            # second-order working-set selection: among lower candidates
            # pick the one with the largest quadratic gain for the pair
            row_i = gram_row(i)
            diff = F[i] - F
            eta_vec = np.maximum(diag[i] + diag - 2.0 * row_i, 1e-12)
            gain = np.where(low & (diff > 0), diff * diff / eta_vec, -np.inf)
            j = int(gain.argmax())

            eta = float(eta_vec[j])
            if ya[i] != ya[j]:
                lo = max(0.0, alpha[j] - alpha[i])
                hi = min(c, c + alpha[j] - alpha[i])
            else:
                lo = max(0.0, alpha[i] + alpha[j] - c)
                hi = min(c, alpha[i] + alpha[j])

            def snap_bound(value: float) -> float:
                # clear float residue so boxed pairs cannot freeze the loop
                if value < snap:
                    return 0.0
                return c if value > c - snap else value

            step = (F[j] - F[i]) * ya[j] / eta  # = y_j (E_i - E_j) / eta
            a_j_new = snap_bound(min(max(alpha[j] + step, lo), hi))
            a_i_new = snap_bound(alpha[i] + ya[i] * ya[j] * (alpha[j] - a_j_new))
            d_i = (a_i_new - alpha[i]) * ya[i]
            d_j = (a_j_new - alpha[j]) * ya[j]
            if d_i == 0.0 and d_j == 0.0:
                break
            alpha[i], alpha[j] = a_i_new, a_j_new
            f += d_i * row_i + d_j * gram_row(j)
            moved = True

        wsq = float((alpha * ya) @ f)
        b = _best_bias(f, ya)
        p_now = _primal(f, ya, b, wsq, c)
        if p_now < best["P"]:
            best = {"P": p_now, "alpha": alpha.copy(), "b": b}
        history.append(best["P"])

        dual = float(alpha.sum()) - 0.5 * wsq
        gap = p_now - dual
        if converged or gap <= cfg.tolerance * max(1.0, abs(p_now)) or not moved:
            break

    w = np.asarray(Xs.T @ (best["alpha"] * ya)).ravel()
    return LinearModel(weights=w, bias=best["b"],
                       objective=best["P"], objective_history=history)


@dataclass
class OneVsRestResult:
    models: dict[str, LinearModel]
    skipped: list[str]


def train_one_vs_rest(
    X: list[SparseVector],
    labelsets: list[set[str]],
    categories: list[str] | tuple[str, ...],
    cfg: TrainConfig | None = None,
    dim: int | None = None,
) -> OneVsRestResult:
    """One binary model per category, trained independently in category
    order. Categories with no positive example are skipped with a warning.
    """
    if len(X) != len(labelsets):
        raise ValueError("X and labelsets must be the same length")
    if dim is None:
        dim = infer_dim(X)
    models: dict[str, LinearModel] = {}
    skipped: list[str] = []
    for category in categories:
        y = [1 if category in labels else -1 for labels in labelsets]
        if 1 not in y:
            logger.warning("category %r has no positive examples; skipped", category)
            skipped.append(category)
            continue
        models[category] = train_binary_svm(X, y, cfg, dim=dim)
    return OneVsRestResult(models=models, skipped=skipped)


def predict(
    models: dict[str, LinearModel], x: SparseVector, mode: str
) -> set[str]:
    """Multi-label: every category with a positive decision value (may be
    empty). Single-label: the argmax category, ties broken by category
    order."""
    if not models:
        raise ValueError("no models to predict with")
    if mode == PredictionMode.MULTI_LABEL:
        return {c for c, m in models.items() if m.decision(x) > 0.0}
    if mode == PredictionMode.SINGLE_LABEL:
        best_category = None
        best_value = -math.inf
        for category, model in models.items():
            value = model.decision(x)
            if value > best_value:
                best_category, best_value = category, value
        return {best_category}
    raise ValueError(f"unknown prediction mode {mode!r}")


def save_models(models: dict[str, LinearModel], path) -> None:
    """One section per category: a header line ``model<TAB>category<TAB>
    bias<TAB>dim`` followed by nonzero ``featureIndex<TAB>weight`` lines."""
    with open(path, "w", encoding="utf-8") as fh:
        for category, model in models.items():
            fh.write(f"model\t{category}\t{float(model.bias)!r}"
                     f"\t{model.weights.shape[0]}\n")
            for i in np.nonzero(model.weights)[0]:
                fh.write(f"{i}\t{float(model.weights[i])!r}\n")


def load_models(path) -> dict[str, LinearModel]:
    models: dict[str, LinearModel] = {}
    current: LinearModel | None = None
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            parts = line.rstrip("\n").split("\t")
            if parts[0] == "model":
                _, category, bias, dim = parts
                current = LinearModel(weights=np.zeros(int(dim)), bias=float(bias))
                models[category] = current
            else:
                if current is None:
                    raise ValueError(f"{path}: weight line before any model header")
                current.weights[int(parts[0])] = float(parts[1])
    return models

"""How well a quality score predicts per-image correctness.

A single-feature logistic regression (IRLS with step halving, small L2
penalty on the slope) is fit on a train split and scored on the held-out
split with ranking AUC and natural-log cross-entropy. Splits group all
variants of an image id on one side.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AllIdsSkipped,
    AllLabelsSkipped,
    DegenerateInput,
    InputError,
    NoConvergence,
    SingleClass,
)
from .rng import keyed_stream
from .stats import average_ranks, bootstrap_ci, join_tables
from .tensorio import CorrectnessTable, ScoreTable

__all__ = [
    "LogRegModel",
    "SplitSpec",
    "sigmoid",
    "fit_logreg",
    "predict_proba",
    "auc",
    "cross_entropy",
    "pointwise_predictability",
    "per_label_predictability",
    "per_image_kfold",
]

_CE_CLAMP = 1e-12


def sigmoid(t):
    """Numerically stable logistic function."""
    t = np.asarray(t, dtype=np.float64)
    out = np.empty_like(t)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    e = np.exp(t[~pos])
    out[~pos] = e / (1.0 + e)
    return out if out.ndim else float(out)


@dataclass
class LogRegModel:
    w: float
    b: float
    n_iter: int
    converged: bool
    objectives: list[float] = field(default_factory=list, repr=False)


@dataclass(frozen=True)
class SplitSpec:
    train_frac: float = 0.8
    unit: str = "image_id"
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_frac < 1.0:
            raise InputError(f"train_frac must be in (0, 1), got {self.train_frac}")
        if self.unit != "image_id":
            raise InputError(f"only image_id splits are supported, got {self.unit!r}")


def _check_binary(m: np.ndarray) -> None:
    vals = np.unique(m)
    if not np.isin(vals, (0.0, 1.0)).all():
        raise InputError(f"outcomes must be 0/1, got values {vals[:5]}")
    if vals.size < 2:
        raise SingleClass("outcome vector contains a single class")


def _objective(q, m, w, b, l2):
    z = w * q + b
    # ln(1 + e^z) - m z, evaluated stably
    nll = float(np.sum(np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z))) - m * z))
    return nll + 0.5 * l2 * w * w


def fit_logreg(q, m, l2: float = 1e-4, tol: float = 1e-8, max_iter: int = 100) -> LogRegModel:
    """Fit p(m=1 | q) = sigmoid(w q + b) by damped Newton steps.

    The objective (penalized negative log-likelihood) is non-increasing
    across iterations: each Newton step is halved until it does not
    increase the objective. Convergence is max param delta < tol.
    Perfect separation stays finite because of the L2 term on w.
    """
    q = np.asarray(q, dtype=np.float64)
    m = np.asarray(m, dtype=np.float64)
    if q.ndim != 1 or q.shape != m.shape:
        raise InputError(f"q and m must be equal-length 1-D, got {q.shape} and {m.shape}")
    if q.shape[0] < 2:
        raise InputError("need at least 2 observations")
    if not np.isfinite(q).all():
        raise InputError("q contains NaN or infinity")
    _check_binary(m)

    w = b = 0.0
    obj = _objective(q, m, w, b, l2)
    objectives = [obj]
    for it in range(1, max_iter + 1):
        z = w * q + b
        p = sigmoid(z)
        g_w = float((p - m) @ q) + l2 * w
        g_b = float(np.sum(p - m))
        s = np.clip(p * (1.0 - p), 1e-12, None)
        h_ww = float(s @ (q * q)) + l2
        h_wb = float(s @ q)
        h_bb = float(np.sum(s))
        det = h_ww * h_bb - h_wb * h_wb
        if det <= 0.0:
            raise NoConvergence(it)
        d_w = (h_bb * g_w - h_wb * g_b) / det
        d_b = (h_ww * g_b - h_wb * g_w) / det
        step = 1.0
        while step > 1e-12:
            new_obj = _objective(q, m, w - step * d_w, b - step * d_b, l2)
            if new_obj <= obj:
                break
            step *= 0.5
        else:
            # no step makes progress: we are at a numerical optimum
            return LogRegModel(w, b, it, True, objectives)
        w -= step * d_w
        b -= step * d_b
        assert new_obj <= obj
        obj = new_obj
        objectives.append(obj)
        if max(abs(step * d_w), abs(step * d_b)) < tol:
            return LogRegModel(w, b, it, True, objectives)
    raise NoConvergence(max_iter)


def predict_proba(model: LogRegModel, q) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64)
    return sigmoid(model.w * q + model.b)


def auc(scores, labels) -> float:
    """Ranking AUC (Mann-Whitney), ties counted 1/2.

    The rank-sum numerator is exact integer-valued, and the below-0.5 side
    is returned as 1.0 minus the mirrored value, so
    auc(s, y) + auc(s, 1 - y) == 1.0 holds exactly.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if s.ndim != 1 or s.shape != y.shape:
        raise InputError(f"scores and labels must be equal-length 1-D, got {s.shape} and {y.shape}")
    if not np.isfinite(s).all():
        raise InputError("scores contain NaN or infinity")
    _check_binary(y)
    n = s.shape[0]
    pos = y == 1.0
    n_pos = int(pos.sum())
    n_neg = n - n_pos
    r_pos = float(average_ranks(s)[pos].sum())  # sums of half-integers: exact
    u = 2.0 * r_pos - n_pos * (n + 1)
    d = abs(u) / (2.0 * n_pos * n_neg)
    hi = 0.5 + d
    return hi if u >= 0 else 1.0 - hi


def cross_entropy(probs, labels) -> float:
    """Mean natural-log cross-entropy; probabilities clamped to [1e-12, 1-1e-12]."""
    p = np.asarray(probs, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if p.ndim != 1 or p.shape != y.shape:
        raise InputError(f"probs and labels must be equal-length 1-D, got {p.shape} and {y.shape}")
    if p.shape[0] == 0:
        raise InputError("empty input")
    if not np.isin(np.unique(y), (0.0, 1.0)).all():
        raise InputError("labels must be 0/1")
    if not np.isfinite(p).all():
        raise InputError("probs contain NaN or infinity")
    pc = np.clip(p, _CE_CLAMP, 1.0 - _CE_CLAMP)
    return float(np.mean(-(y * np.log(pc) + (1.0 - y) * np.log1p(-pc))))


# --------------------------------------------------------------------------
# protocols over score/correctness tables
# --------------------------------------------------------------------------

def _joined_arrays(scores, correctness, metric, model):
    rows = join_tables(scores, correctness, metric, model)
    ids = np.array([r[0] for r in rows])
    q = np.array([r[3] for r in rows], dtype=np.float64)
    m = np.array([r[4] for r in rows], dtype=np.float64)
    return ids, q, m


def _split_ids(unique_ids: np.ndarray, train_frac: float, rng) -> tuple[set, set]:
    n = unique_ids.shape[0]
    n_train = int(math.floor(train_frac * n + 0.5))
    if n_train == 0 or n_train == n:
        raise InputError(f"split leaves an empty side ({n_train}/{n - n_train}) for {n} ids")
    perm = rng.permutation(n)
    return set(unique_ids[perm[:n_train]]), set(unique_ids[perm[n_train:]])


def _eval_split(q, m, train_mask, l2=1e-4):
    model = fit_logreg(q[train_mask], m[train_mask], l2=l2)
    p = predict_proba(model, q[~train_mask])
    return model, auc(p, m[~train_mask]), cross_entropy(p, m[~train_mask])


def pointwise_predictability(
    scores: ScoreTable,
    correctness: CorrectnessTable,
    metric: str,
    model: str,
    split: SplitSpec = SplitSpec(),
    resamples: int = 1000,
    level: float = 0.95,
) -> dict:
    """Fit on 80% of image ids, report held-out AUC/CE with bootstrap CIs."""
    ids, q, m = _joined_arrays(scores, correctness, metric, model)
    uniq = np.array(sorted(set(ids.tolist())))
    train_ids, _ = _split_ids(uniq, split.train_frac, keyed_stream(split.seed, "split"))
    train_mask = np.isin(ids, sorted(train_ids))
    fitted, test_auc, test_ce = _eval_split(q, m, train_mask)
    p_test = predict_proba(fitted, q[~train_mask])
    paired = np.column_stack([p_test, m[~train_mask]])

    def auc_stat(rows):
        try:
            return auc(rows[:, 0], rows[:, 1])
        except (SingleClass, InputError):
            return float("nan")

    auc_lo, auc_hi = bootstrap_ci(paired, auc_stat, resamples=resamples, level=level, seed=split.seed)
    ce_lo, ce_hi = bootstrap_ci(
        paired,
        lambda rows: cross_entropy(rows[:, 0], rows[:, 1]),
        resamples=resamples,
        level=level,
        seed=split.seed,
    )
    return {
        "auc": test_auc,
        "auc_lo": auc_lo,
        "auc_hi": auc_hi,
        "ce": test_ce,
        "ce_lo": ce_lo,
        "ce_hi": ce_hi,
        "n_train": int(train_mask.sum()),
        "n_test": int((~train_mask).sum()),
    }


def per_label_predictability(
    scores: ScoreTable,
    correctness: CorrectnessTable,
    labels: dict[str, int],
    metric: str,
    model: str,
    split: SplitSpec = SplitSpec(),
) -> dict:
    """One fit per label; mean and spread of held-out AUC/CE across labels.

    Within a label, ids are sorted and split by a seed-keyed positional
    permutation, so two labels with identical data get identical splits.
    Labels whose train or test side is single-class (or that cannot be
    split) are skipped and counted.
    """
    ids, q, m = _joined_arrays(scores, correctness, metric, model)
    by_label: dict[int, list[int]] = {}
    for i, image_id in enumerate(ids.tolist()):
        if image_id not in labels:
            raise InputError(f"no label for image_id {image_id!r}")
        by_label.setdefault(labels[image_id], []).append(i)

    aucs, ces = [], []
    skipped = 0
    for label in sorted(by_label):
        idx = np.array(by_label[label])
        uniq = np.array(sorted(set(ids[idx].tolist())))
        try:
            train_ids, _ = _split_ids(uniq, split.train_frac, keyed_stream(split.seed, "label-split", len(uniq)))
            train_mask = np.isin(ids[idx], sorted(train_ids))
            _, a, c = _eval_split(q[idx], m[idx], train_mask)
        except (SingleClass, InputError):
            skipped += 1
            continue
        aucs.append(a)
        ces.append(c)
    if not aucs:
        raise AllLabelsSkipped(f"all {len(by_label)} labels were skipped")
    return {
        "mauc": float(np.mean(aucs)),
        "mauc_sigma": float(np.std(aucs)),
        "mce": float(np.mean(ces)),
        "mce_sigma": float(np.std(ces)),
        "n_labels": len(aucs),
        "skipped": skipped,
    }


def per_image_kfold(
    scores: ScoreTable,
    correctness: CorrectnessTable,
    metric: str,
    model: str,
    folds: int = 5,
    seed: int = 0,
) -> dict:
    """K-fold CV over each image id's (clean + corrupted) variants.

    Fold assignment permutes an id's variants with a stream keyed by
    (seed, image_id), order-independently. Ids with fewer variants than
    folds or a single outcome class are skipped; folds whose train or test
    side is single-class are skipped too. Mean/std are over all (id, fold)
    AUC values.
    """
    if folds < 2:
        raise InputError(f"folds must be >= 2, got {folds}")
    ids, q, m = _joined_arrays(scores, correctness, metric, model)
    by_id: dict[str, list[int]] = {}
    for i, image_id in enumerate(ids.tolist()):
        by_id.setdefault(image_id, []).append(i)

    fold_aucs = []
    skipped = 0
    used_ids = 0
    for image_id in sorted(by_id):
        idx = np.array(by_id[image_id])
        if idx.shape[0] < folds or np.unique(m[idx]).size < 2:
            skipped += 1
            continue
        perm = keyed_stream(seed, "fold", image_id).permutation(idx.shape[0])
        got_any = False
        for part in np.array_split(perm, folds):
            test_mask = np.zeros(idx.shape[0], dtype=bool)
            test_mask[part] = True
            try:
                model_fit = fit_logreg(q[idx][~test_mask], m[idx][~test_mask])
                p = predict_proba(model_fit, q[idx][test_mask])
                fold_aucs.append(auc(p, m[idx][test_mask]))
                got_any = True
            except (SingleClass, InputError):
                continue
        if got_any:
            used_ids += 1
        else:
            skipped += 1
    if not fold_aucs:
        raise AllIdsSkipped(f"all {len(by_id)} image ids were skipped")
    return {
        "mauc": float(np.mean(fold_aucs)),
        "mauc_sigma": float(np.std(fold_aucs)),
        "n_ids": used_ids,
        "skipped": skipped,
    }

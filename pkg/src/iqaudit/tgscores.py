"""Task-guided quality scores from classifier logits or zero-shot similarities.

Three per-image scores are derived from a row of class scores z:

* q_p, the maximum softmax probability,
* q_h, the softmax entropy in nats (0 ln 0 := 0),
* q_l, the maximum raw input score (logit or similarity, untempered).

Entropy uses the identity H = ln S - (sum_i e_i t_i) / S with t = z - max(z)
and e = exp(t), which keeps H >= 0 in floating point and returns ln K
bit-exactly for uniform rows.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InputError, NonFiniteValue, NotNormalized, ZeroNormRow
from .tensorio import DatasetManifest, ScoreRecord

__all__ = [
    "QualityTriple",
    "softmax",
    "strong_tg_scores",
    "normalize_rows",
    "zeroshot_similarities",
    "zsclip_scores",
    "score_records",
    "TG_METRIC_PREFIX",
    "ZSCLIP_METRIC_PREFIX",
    "DEFAULT_TEMPERATURE",
]

TG_METRIC_PREFIX = "tg"
ZSCLIP_METRIC_PREFIX = "zsclip"
DEFAULT_TEMPERATURE = 0.01
_NORM_TOL = 1e-5


@dataclass(frozen=True)
class QualityTriple:
    q_p: float
    q_h: float
    q_l: float


def _as_matrix(z, what: str, min_cols: int = 1) -> np.ndarray:
    arr = np.asarray(z, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionMismatch(f"{what} must be 2-D, got {arr.ndim}-D")
    if arr.shape[1] < min_cols:
        raise DimensionMismatch(f"{what} needs at least {min_cols} columns, got {arr.shape[1]}")
    if arr.size and not np.isfinite(arr).all():
        raise NonFiniteValue(f"{what} contains NaN or infinity")
    return arr


def softmax(z) -> np.ndarray:
    """Row-wise softmax, shifted by the row max for stability."""
    arr = _as_matrix(z, "logits")
    t = arr - arr.max(axis=1, keepdims=True)
    e = np.exp(t)
    return e / e.sum(axis=1, keepdims=True)


def _triples(raw: np.ndarray, tempered: np.ndarray) -> list[QualityTriple]:
    t = tempered - tempered.max(axis=1, keepdims=True)
    e = np.exp(t)
    s = e.sum(axis=1)
    q_p = e.max(axis=1) / s
    q_h = np.log(s) - (e * t).sum(axis=1) / s
    q_l = raw.max(axis=1)
    return [QualityTriple(float(p), float(h), float(l)) for p, h, l in zip(q_p, q_h, q_l)]


def strong_tg_scores(logits) -> list[QualityTriple]:
    """Quality triples from raw classifier logits (n x K, K >= 2)."""
    arr = _as_matrix(logits, "logits", min_cols=2)
    return _triples(arr, arr)


def normalize_rows(x) -> np.ndarray:
    """L2-normalize rows; rows with norm <= 1e-12 raise ZeroNormRow."""
    arr = _as_matrix(x, "matrix")
    norms = np.sqrt((arr * arr).sum(axis=1))
    bad = np.flatnonzero(norms <= 1e-12)
    if bad.size:
        raise ZeroNormRow(f"row {bad[0]} has norm {norms[bad[0]]:.3e}")
    return arr / norms[:, None]


def _check_normalized(arr: np.ndarray, what: str) -> None:
    norms = np.sqrt((arr * arr).sum(axis=1))
    bad = np.flatnonzero(np.abs(norms - 1.0) > _NORM_TOL)
    if bad.size:
        raise NotNormalized(f"{what} row {bad[0]} has norm {norms[bad[0]]:.8f}")


def zeroshot_similarities(embeddings, text_weights) -> np.ndarray:
    """Cosine similarities z @ w.T of unit-norm rows (checked)."""
    z = _as_matrix(embeddings, "embeddings")
    w = _as_matrix(text_weights, "text_weights")
    if z.shape[1] != w.shape[1]:
        raise DimensionMismatch(f"embedding dim {z.shape[1]} != text weight dim {w.shape[1]}")
    _check_normalized(z, "embeddings")
    _check_normalized(w, "text_weights")
    return z @ w.T


def zsclip_scores(similarities, temperature: float = DEFAULT_TEMPERATURE) -> list[QualityTriple]:
    """Quality triples from similarities; softmax is tempered, q_l is not."""
    if not (isinstance(temperature, (int, float)) and temperature > 0.0):
        raise InputError(f"temperature must be > 0, got {temperature!r}")
    arr = _as_matrix(similarities, "similarities", min_cols=2)
    return _triples(arr, arr / float(temperature))


def score_records(
    manifest: DatasetManifest, triples: list[QualityTriple], prefix: str
) -> list[ScoreRecord]:
    """One ScoreRecord per (entry, score) with metrics <prefix>.q_{p,h,l}."""
    if len(triples) != len(manifest):
        raise DimensionMismatch(f"{len(triples)} triples for {len(manifest)} manifest entries")
    records = []
    for e, t in zip(manifest, triples):
        for name, value in (("q_p", t.q_p), ("q_h", t.q_h), ("q_l", t.q_l)):
            records.append(
                ScoreRecord(e.image_id, e.corruption, e.severity, f"{prefix}.{name}", float(value))
            )
    return records

"""Group means, correlation coefficients, bootstrap CIs, permutation tests.

Tie handling is pinned down so independent implementations can agree to
the last bit: ranks are average ranks, spearman is literally pearson of
those ranks, and kendall is the tau-b statistic with all tie terms kept
in exact integer arithmetic until the final division.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DegenerateInput, EmptyInput, EmptyJoin, TooFewGroups
from .rng import keyed_stream
from .tensorio import CorrectnessTable, ScoreTable, format_value

__all__ = [
    "GroupSummary",
    "group_means",
    "average_ranks",
    "pearson",
    "spearman",
    "kendall_tau_b",
    "bootstrap_ci",
    "correlation_report",
    "write_report_csv",
    "REPORT_COLUMNS",
]


# --------------------------------------------------------------------------
# grouping
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class GroupSummary:
    corruption: str
    severity: int
    mean_score: float
    mean_correct: float
    n: int


def join_tables(
    scores: ScoreTable, correctness: CorrectnessTable, metric: str, model: str
) -> list[tuple[str, str, int, float, int]]:
    """Inner-join on (image_id, corruption, severity); returns (id, corruption, severity, score, correct)."""
    by_key = {
        (r.image_id, r.corruption, r.severity): r.value
        for r in scores
        if r.metric == metric
    }
    rows = []
    for c in correctness:
        if c.model != model:
            continue
        k = (c.image_id, c.corruption, c.severity)
        if k in by_key:
            rows.append((c.image_id, c.corruption, c.severity, by_key[k], c.correct))
    if not rows:
        raise EmptyJoin(f"no joined rows for metric {metric!r} and model {model!r}")
    return rows


def group_means(
    scores: ScoreTable, correctness: CorrectnessTable, metric: str, model: str
) -> list[GroupSummary]:
    """Per-(corruption, severity) means of score and correctness."""
    rows = join_tables(scores, correctness, metric, model)
    acc: dict[tuple[str, int], list[float]] = {}
    for _, corruption, severity, q, m in rows:
        bucket = acc.setdefault((corruption, severity), [0.0, 0.0, 0])
        bucket[0] += q
        bucket[1] += m
        bucket[2] += 1
    return [
        GroupSummary(c, s, qs / n, ms / n, n)
        for (c, s), (qs, ms, n) in sorted(acc.items())
    ]


# --------------------------------------------------------------------------
# correlation coefficients
# --------------------------------------------------------------------------

def _pair(x, y, min_n: int = 2) -> tuple[np.ndarray, np.ndarray]:
    xa = np.asarray(x, dtype=np.float64)
    ya = np.asarray(y, dtype=np.float64)
    if xa.ndim != 1 or ya.ndim != 1:
        raise DegenerateInput("inputs must be 1-D")
    if xa.shape != ya.shape:
        raise DegenerateInput(f"length mismatch: {xa.shape[0]} vs {ya.shape[0]}")
    if xa.shape[0] < min_n:
        raise DegenerateInput(f"need at least {min_n} observations, got {xa.shape[0]}")
    if not (np.isfinite(xa).all() and np.isfinite(ya).all()):
        raise DegenerateInput("inputs contain NaN or infinity")
    return xa, ya


def average_ranks(x) -> np.ndarray:
    """1-based ranks with ties assigned the average of their positions."""
    xa = np.asarray(x, dtype=np.float64)
    n = xa.shape[0]
    order = np.argsort(xa, kind="stable")
    sx = xa[order]
    starts = np.r_[True, sx[1:] != sx[:-1]]
    run_id = np.cumsum(starts) - 1
    first = np.flatnonzero(starts)
    run_len = np.diff(np.r_[first, n])
    avg = first + (run_len + 1) / 2.0
    ranks = np.empty(n, dtype=np.float64)
    ranks[order] = avg[run_id]
    return ranks


def pearson(x, y) -> float:
    """Linear correlation coefficient, clamped to [-1, 1]."""
    xa, ya = _pair(x, y)
    xc = xa - xa.mean()
    yc = ya - ya.mean()
    sxx = float(xc @ xc)
    syy = float(yc @ yc)
    if sxx == 0.0 or syy == 0.0:
        raise DegenerateInput("zero variance")
    r = float(xc @ yc) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def spearman(x, y) -> float:
    """Rank correlation: pearson of average ranks (identical tie rule)."""
    xa, ya = _pair(x, y)
    return pearson(average_ranks(xa), average_ranks(ya))


def _merge_count(a: list[float]) -> tuple[list[float], int]:
    n = len(a)
    if n < 2:
        return a, 0
    left, inv_l = _merge_count(a[: n // 2])
    right, inv_r = _merge_count(a[n // 2 :])
    merged = []
    inv = inv_l + inv_r
    i = j = 0
    while i < len(left) and j < len(right):
        if left[i] <= right[j]:
            merged.append(left[i])
            i += 1
        else:
            inv += len(left) - i
            merged.append(right[j])
            j += 1
    merged.extend(left[i:])
    merged.extend(right[j:])
    return merged, inv


def _tie_term(sorted_arr: np.ndarray) -> int:
    starts = np.r_[True, sorted_arr[1:] != sorted_arr[:-1]]
    first = np.flatnonzero(starts)
    run_len = np.diff(np.r_[first, len(sorted_arr)])
    return int(sum(int(t) * (int(t) - 1) // 2 for t in run_len))


def kendall_tau_b(x, y) -> float:
    """Kendall rank correlation with tie correction (tau-b).

    (C - D) / sqrt((n0 - n1)(n0 - n2)) with n0 = n(n-1)/2 and n1, n2 the
    tied-pair counts in x and y. Discordant pairs are counted as merge-sort
    inversions of y after sorting by (x, y), so the whole numerator stays
    in integer arithmetic.
    """
    xa, ya = _pair(x, y)
    n = xa.shape[0]
    perm = np.lexsort((ya, xa))
    xs, ys = xa[perm], ya[perm]
    n0 = n * (n - 1) // 2
    n1 = _tie_term(xs)
    n2 = _tie_term(np.sort(ya, kind="stable"))
    starts = np.r_[True, (xs[1:] != xs[:-1]) | (ys[1:] != ys[:-1])]
    first = np.flatnonzero(starts)
    run_len = np.diff(np.r_[first, n])
    n3 = int(sum(int(t) * (int(t) - 1) // 2 for t in run_len))
    _, dis = _merge_count(list(ys))
    den1 = n0 - n1
    den2 = n0 - n2
    if den1 == 0 or den2 == 0:
        raise DegenerateInput("all values tied in x or y")
    num = n0 - n1 - n2 + n3 - 2 * dis
    tau = num / math.sqrt(den1 * den2)
    return max(-1.0, min(1.0, tau))


# --------------------------------------------------------------------------
# bootstrap and permutation machinery
# --------------------------------------------------------------------------

def bootstrap_ci(values, statistic, resamples: int = 1000, level: float = 0.95, seed: int = 0):
    """Percentile bootstrap interval for ``statistic`` over ``values``.

    Rows (or elements, for 1-D input) are resampled with replacement;
    resample i draws its indices from a stream keyed by (seed, i), so the
    result does not depend on evaluation order. Resample statistics that
    come out NaN are dropped from the percentiles. level -> 1.0 degenerates
    to (min, max).
    """
    arr = np.asarray(values)
    n = arr.shape[0] if arr.ndim else 0
    if n == 0:
        raise EmptyInput("cannot bootstrap an empty sample")
    if not 0.0 < level <= 1.0:
        raise DegenerateInput(f"level must be in (0, 1], got {level}")
    if resamples < 1:
        raise DegenerateInput(f"resamples must be >= 1, got {resamples}")
    stats = np.empty(resamples, dtype=np.float64)
    for i in range(resamples):
        idx = keyed_stream(seed, "bootstrap", i).integers(0, n, size=n)
        stats[i] = statistic(arr[idx])
    good = stats[~np.isnan(stats)]
    if good.size == 0:
        raise DegenerateInput("statistic was NaN on every resample")
    alpha = (1.0 - level) / 2.0
    lo, hi = np.percentile(good, [100.0 * alpha, 100.0 * (1.0 - alpha)])
    return float(lo), float(hi)


_COEFS = (("krcc", kendall_tau_b), ("srcc", spearman), ("plcc", pearson))

REPORT_COLUMNS = (
    "metric",
    "model",
    "krcc",
    "krcc_lo",
    "krcc_hi",
    "srcc",
    "srcc_lo",
    "srcc_hi",
    "plcc",
    "plcc_lo",
    "plcc_hi",
    "krcc_p",
    "srcc_p",
    "plcc_p",
)


def correlation_report(
    summaries: list[GroupSummary],
    metric: str,
    model: str,
    resamples: int = 1000,
    permutations: int = 1000,
    level: float = 0.95,
    seed: int = 0,
) -> dict:
    """Absolute KRCC/SRCC/PLCC over group means with CIs and p-values.

    Coefficients are reported as magnitudes. CIs are percentile bootstrap
    over groups (shared resampling plan across the three coefficients);
    p-values come from a permutation test that shuffles the accuracy means
    against the score means, p = (1 + #{|t*| >= |t|}) / (1 + permutations).
    """
    if len(summaries) < 3:
        raise TooFewGroups(f"need at least 3 groups, got {len(summaries)}")
    q = np.array([g.mean_score for g in summaries], dtype=np.float64)
    m = np.array([g.mean_correct for g in summaries], dtype=np.float64)
    out: dict[str, object] = {"metric": metric, "model": model, "n_groups": len(summaries)}
    paired = np.column_stack([q, m])

    for name, coef in _COEFS:
        out[name] = abs(coef(q, m))

        def stat(rows, _coef=coef):
            try:
                return abs(_coef(rows[:, 0], rows[:, 1]))
            except DegenerateInput:
                return float("nan")

        lo, hi = bootstrap_ci(paired, stat, resamples=resamples, level=level, seed=seed)
        out[f"{name}_lo"], out[f"{name}_hi"] = lo, hi

    exceed = {name: 0 for name, _ in _COEFS}
    n = len(summaries)
    for i in range(permutations):
        mp = m[keyed_stream(seed, "permutation", i).permutation(n)]
        for name, coef in _COEFS:
            try:
                t = abs(coef(q, mp))
            except DegenerateInput:
                t = float("nan")
            if t >= out[name]:
                exceed[name] += 1
    for name, _ in _COEFS:
        out[f"{name}_p"] = (1 + exceed[name]) / (1 + permutations)
    return out


def write_report_csv(reports: list[dict], path: str | Path) -> None:
    """One row per correlation report, columns in REPORT_COLUMNS order."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(REPORT_COLUMNS) + "\n")
        for rep in reports:
            cells = [str(rep["metric"]), str(rep["model"])]
            cells += [format_value(float(rep[c])) for c in REPORT_COLUMNS[2:]]
            fh.write(",".join(cells) + "\n")

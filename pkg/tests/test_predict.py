"""Logistic fits, ranking AUC, cross entropy, and predictability protocols."""
import math

import numpy as np
import pytest

import reference
from iqaudit.errors import AllIdsSkipped, AllLabelsSkipped, SingleClass
from iqaudit.predict import (
    SplitSpec,
    auc,
    cross_entropy,
    fit_logreg,
    per_image_kfold,
    per_label_predictability,
    pointwise_predictability,
    predict_proba,
    sigmoid,
)
from iqaudit.tensorio import (
    CorrectnessRecord,
    CorrectnessTable,
    ScoreRecord,
    ScoreTable,
)


def test_sigmoid_stable_at_extremes():
    assert sigmoid(np.array([800.0]))[0] == 1.0
    assert sigmoid(np.array([-800.0]))[0] == 0.0
    assert sigmoid(np.array([0.0]))[0] == 0.5


def test_auc_matches_pair_counting():
    rng = np.random.default_rng(0)
    for _ in range(200):
        n = int(rng.integers(4, 120))
        s = rng.integers(0, 12, size=n).astype(float)  # ties likely
        y = rng.integers(0, 2, size=n)
        if y.min() == y.max():
            continue
        assert auc(s, y) == pytest.approx(reference.auc_pairs(s, y), abs=1e-9)


def test_auc_known_cases():
    assert auc(np.array([0.1, 0.2, 0.8, 0.9]), np.array([0, 0, 1, 1])) == 1.0
    assert auc(np.array([0.9, 0.8, 0.2, 0.1]), np.array([0, 0, 1, 1])) == 0.0
    assert auc(np.array([0.5, 0.5, 0.5, 0.5]), np.array([0, 1, 0, 1])) == 0.5


def test_auc_complement_is_exact():
    rng = np.random.default_rng(1)
    for _ in range(300):
        n = int(rng.integers(4, 80))
        s = rng.standard_normal(n)
        y = rng.integers(0, 2, size=n)
        if y.min() == y.max():
            continue
        assert auc(s, y) + auc(s, 1 - y) == 1.0


def test_auc_single_class_rejected():
    with pytest.raises(SingleClass):
        auc(np.array([0.1, 0.2]), np.array([1, 1]))


def test_cross_entropy_exact_at_half():
    p = np.full(10, 0.5)
    y = np.array([0, 1] * 5)
    assert abs(cross_entropy(p, y) - math.log(2.0)) < 1e-12


def test_cross_entropy_matches_formula():
    rng = np.random.default_rng(2)
    p = rng.uniform(0.05, 0.95, size=50)
    y = rng.integers(0, 2, size=50)
    want = float(np.mean(-(y * np.log(p) + (1 - y) * np.log1p(-p))))
    assert cross_entropy(p, y) == pytest.approx(want, abs=1e-12)


def test_logreg_recovers_planted_parameters():
    rng = np.random.default_rng(3)
    n = 20_000
    q = rng.uniform(-2, 2, size=n)
    m = (rng.random(n) < sigmoid(3.0 * q - 1.0)).astype(np.int64)
    model = fit_logreg(q, m)
    assert model.converged
    assert abs(model.w - 3.0) < 0.1
    assert abs(model.b + 1.0) < 0.1


def test_logreg_matches_scipy_optimizer():
    rng = np.random.default_rng(4)
    q = rng.standard_normal(400)
    m = (rng.random(400) < sigmoid(1.5 * q + 0.3)).astype(np.int64)
    model = fit_logreg(q, m)
    w_ref, b_ref = reference.logreg_scipy(q, m)
    assert model.w == pytest.approx(w_ref, abs=2e-4)
    assert model.b == pytest.approx(b_ref, abs=2e-4)


def test_logreg_objective_monotone_every_iteration():
    rng = np.random.default_rng(5)
    for trial in range(10):
        n = int(rng.integers(20, 400))
        q = rng.standard_normal(n) * float(rng.uniform(0.5, 4))
        m = (rng.random(n) < sigmoid(rng.uniform(-3, 3) * q)).astype(np.int64)
        if m.min() == m.max():
            continue
        model = fit_logreg(q, m)
        objs = model.objectives
        assert all(objs[i + 1] <= objs[i] + 1e-15 for i in range(len(objs) - 1)), trial


def test_logreg_separable_converges_finite():
    q = np.array([-2.0, -1.5, -1.0, 1.0, 1.5, 2.0])
    m = np.array([0, 0, 0, 1, 1, 1])
    model = fit_logreg(q, m)
    assert model.converged
    assert math.isfinite(model.w) and math.isfinite(model.b)
    # L2 keeps the slope bounded even with a perfect separator
    assert abs(model.w) < 1e4
    p = predict_proba(model, q)
    assert (p[:3] < 0.5).all() and (p[3:] > 0.5).all()


def test_logreg_single_class_rejected():
    with pytest.raises(SingleClass):
        fit_logreg(np.arange(5.0), np.ones(5, dtype=np.int64))


def _paired_tables(n_ids, score_of, p_of, model="net", metric="m", seed=0, sevs=(0, 1)):
    rng = np.random.default_rng(seed)
    srecs, crecs = [], []
    for i in range(n_ids):
        iid = f"im{i:04d}"
        for sev in sevs:
            corr = "clean" if sev == 0 else "contrast"
            s = score_of(i, sev, rng)
            ok = int(rng.random() < p_of(i, sev, rng))
            srecs.append(ScoreRecord(iid, corr, sev, metric, s))
            crecs.append(CorrectnessRecord(iid, corr, sev, model, ok))
    return ScoreTable(srecs), CorrectnessTable(crecs)


def test_pointwise_predictability_signal_vs_noise():
    # informative score: correctness probability rises with the score
    scores, correctness = _paired_tables(
        400,
        score_of=lambda i, sev, rng: rng.uniform(0, 1),
        p_of=lambda i, sev, rng: 0.0,  # overwritten below
        seed=6,
    )
    # rebuild correctness from the actual scores so the link is direct
    by_key = {r.key(): r.value for r in scores}
    rng = np.random.default_rng(7)
    crecs = [
        CorrectnessRecord(
            r.image_id, r.corruption, r.severity, "net",
            int(rng.random() < sigmoid(6.0 * (by_key[r.key()] - 0.5))),
        )
        for r in scores
    ]
    correctness = CorrectnessTable(crecs)
    res = pointwise_predictability(scores, correctness, "m", "net", resamples=50)
    assert res["auc"] > 0.7
    assert res["auc_lo"] <= res["auc"] <= res["auc_hi"]
    assert res["ce"] < math.log(2.0)
    assert res["n_train"] + res["n_test"] == 800


def test_pointwise_split_is_by_image_id():
    scores, correctness = _paired_tables(
        50,
        score_of=lambda i, sev, rng: float(i),
        p_of=lambda i, sev, rng: 0.5,
        seed=8,
    )
    split = SplitSpec(train_frac=0.8, unit="image_id", seed=3)
    res = pointwise_predictability(scores, correctness, "m", "net", split=split, resamples=10)
    # 50 ids * 0.8 = 40 train ids, each contributing both variants
    assert res["n_train"] == 80
    assert res["n_test"] == 20


def test_pointwise_deterministic():
    scores, correctness = _paired_tables(
        60,
        score_of=lambda i, sev, rng: rng.uniform(0, 1),
        p_of=lambda i, sev, rng: 0.6,
        seed=9,
    )
    a = pointwise_predictability(scores, correctness, "m", "net", resamples=30)
    b = pointwise_predictability(scores, correctness, "m", "net", resamples=30)
    assert a == b


def test_per_label_sigma_zero_for_identical_labels():
    # every label has identical (score, correctness) data, so the spread
    # across labels must be exactly zero
    srecs, crecs = [], []
    for lab in range(4):
        for i in range(30):
            iid = f"l{lab}_{i:03d}"
            s = (i * 37 % 30) / 30.0
            srecs.append(ScoreRecord(iid, "clean", 0, "m", s))
            crecs.append(CorrectnessRecord(iid, "clean", 0, "net", int(s > 0.45)))
    labels = {f"l{lab}_{i:03d}": lab for lab in range(4) for i in range(30)}
    res = per_label_predictability(
        ScoreTable(srecs), CorrectnessTable(crecs), labels, "m", "net"
    )
    assert res["n_labels"] == 4
    assert res["mauc_sigma"] == 0.0
    assert res["mce_sigma"] == 0.0


def test_per_label_skips_single_class_labels():
    srecs, crecs = [], []
    for lab, p_ok in ((0, 0.5), (1, 1.0)):  # label 1 is always correct
        for i in range(24):
            iid = f"l{lab}_{i:03d}"
            srecs.append(ScoreRecord(iid, "clean", 0, "m", (i % 7) / 7.0))
            crecs.append(
                CorrectnessRecord(iid, "clean", 0, "net", 1 if lab == 1 else i % 2)
            )
    labels = {f"l{lab}_{i:03d}": lab for lab in (0, 1) for i in range(24)}
    res = per_label_predictability(ScoreTable(srecs), CorrectnessTable(crecs), labels, "m", "net")
    assert res["n_labels"] == 1
    assert res["skipped"] == 1
    with pytest.raises(AllLabelsSkipped):
        only_one = {k: v for k, v in labels.items() if v == 1}
        sub_s = ScoreTable([r for r in srecs if r.image_id in only_one])
        sub_c = CorrectnessTable([r for r in crecs if r.image_id in only_one])
        per_label_predictability(sub_s, sub_c, only_one, "m", "net")


def test_per_image_kfold_basic():
    rng = np.random.default_rng(10)
    srecs, crecs = [], []
    sevs = [(("clean", 0)), (("contrast", 1)), (("contrast", 2)), (("pixelate", 1)),
            (("pixelate", 2)), (("brightness", 1)), (("brightness", 2)), (("shot_noise", 1)),
            (("shot_noise", 2)), (("gaussian_noise", 1))]
    for i in range(12):
        iid = f"im{i:03d}"
        for corr, sev in sevs:
            s = float(rng.uniform(0, 1))
            srecs.append(ScoreRecord(iid, corr, sev, "m", s))
            crecs.append(CorrectnessRecord(iid, corr, sev, "net", int(rng.random() < s)))
    res = per_image_kfold(ScoreTable(srecs), CorrectnessTable(crecs), "m", "net", folds=5)
    assert 0 <= res["mauc"] <= 1
    assert res["n_ids"] + res["skipped"] == 12
    assert res["n_ids"] >= 1


def test_per_image_kfold_all_skipped():
    srecs = [ScoreRecord("a", "clean", 0, "m", 0.5), ScoreRecord("a", "contrast", 1, "m", 0.6)]
    crecs = [CorrectnessRecord("a", "clean", 0, "net", 1), CorrectnessRecord("a", "contrast", 1, "net", 1)]
    with pytest.raises(AllIdsSkipped):
        per_image_kfold(ScoreTable(srecs), CorrectnessTable(crecs), "m", "net", folds=5)

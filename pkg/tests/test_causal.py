"""Graphs, d-separation, claims, simulation, and stratified effects."""
import math

import numpy as np
import pytest
import scipy.stats

import reference
from iqaudit.causal import (
    AceResult,
    Claim,
    Dag,
    SampleFrame,
    ScmSpec,
    ace_estimate,
    builtin_claims,
    builtin_dags,
    builtin_scms,
    d_separated,
    simulate,
    verify_claims,
    within_stratum_auc,
    write_frame_csv,
)
from iqaudit.errors import (
    CycleError,
    InputError,
    MechanismMismatch,
    NoValidStrata,
    UnknownNode,
)
from iqaudit.predict import auc


def test_dag_validation():
    with pytest.raises(CycleError):
        Dag(("a", "b"), [("a", "b"), ("b", "a")])
    with pytest.raises(CycleError):
        Dag(("a",), [("a", "a")])
    with pytest.raises(UnknownNode):
        Dag(("a",), [("a", "b")])
    with pytest.raises(InputError):
        Dag(("a", "a"), [])
    with pytest.raises(InputError):
        Dag(("a", "b"), [("a", "b"), ("a", "b")])


def test_dag_structure_queries():
    d = Dag(("a", "b", "c"), [("a", "b"), ("b", "c"), ("a", "c")])
    assert d.parents("c") == ("b", "a") or set(d.parents("c")) == {"a", "b"}
    assert set(d.children("a")) == {"b", "c"}
    order = d.topo_order()
    assert order.index("a") < order.index("b") < order.index("c")
    assert d.ancestors(["c"]) == {"a", "b", "c"}
    with pytest.raises(UnknownNode):
        d.parents("zz")


def test_dsep_textbook_structures():
    chain = Dag(("a", "m", "b"), [("a", "m"), ("m", "b")])
    assert not d_separated(chain, "a", "b")
    assert d_separated(chain, "a", "b", "m")

    fork = Dag(("a", "m", "b"), [("m", "a"), ("m", "b")])
    assert not d_separated(fork, "a", "b")
    assert d_separated(fork, "a", "b", "m")

    collider = Dag(("a", "m", "b"), [("a", "m"), ("b", "m")])
    assert d_separated(collider, "a", "b")
    assert not d_separated(collider, "a", "b", "m")

    # conditioning on a collider's descendant also opens the path
    desc = Dag(("a", "m", "b", "d"), [("a", "m"), ("b", "m"), ("m", "d")])
    assert d_separated(desc, "a", "b")
    assert not d_separated(desc, "a", "b", "d")


def test_dsep_set_arguments_and_validation():
    d = Dag(("a", "b", "c", "e"), [("a", "c"), ("b", "c"), ("c", "e")])
    assert d_separated(d, {"a"}, {"b"})
    assert not d_separated(d, {"a"}, {"b", "e"})
    with pytest.raises(InputError):
        d_separated(d, "a", "a")
    with pytest.raises(InputError):
        d_separated(d, "a", "b", "a")
    with pytest.raises(UnknownNode):
        d_separated(d, "a", "zz")


def test_dsep_matches_path_enumeration_oracle():
    rng = np.random.default_rng(0)
    checked = 0
    for _ in range(150):
        names, edges = reference.random_dag(rng)
        dag = Dag(names, edges)
        for i, a in enumerate(names):
            for b in names[i + 1 :]:
                rest = [v for v in names if v not in (a, b)]
                zs = [()] + [(v,) for v in rest]
                for z in zs:
                    got = d_separated(dag, a, b, z)
                    want = reference.dsep_paths(names, edges, a, b, z)
                    assert got == want, (edges, a, b, z)
                    checked += 1
    assert checked > 2000


def test_builtin_graphs_exist_and_are_acyclic():
    dags = builtin_dags()
    assert set(dags) == {
        "baseline",
        "shared_z",
        "strong_tg",
        "weak_tg",
        "nr_iqa",
        "fr_iqa",
        "common_corruptions",
        "baseline_latents",
    }
    for d in dags.values():
        assert {"Q", "M"} <= set(d.nodes)
        assert len(d.topo_order()) == len(d.nodes)


def test_builtin_claims_all_pass():
    results = verify_claims()
    assert len(results) == 9
    assert all(r.passed for r in results)
    primary = [r for r in results if not r.informational]
    assert len(primary) == 8
    by_dag = {(r.dag, tuple(sorted(r.z))): r.actual for r in results}
    assert by_dag[("baseline", ("X",))] is True
    assert by_dag[("shared_z", ("X",))] is False
    assert by_dag[("strong_tg", ("X",))] is False
    assert by_dag[("weak_tg", ("T", "X"))] is False
    assert by_dag[("weak_tg", ("X",))] is True
    assert by_dag[("nr_iqa", ("X",))] is True
    assert by_dag[("fr_iqa", ("X",))] is True
    assert by_dag[("common_corruptions", ("X",))] is True
    assert by_dag[("baseline_latents", ("X",))] is True


def test_claim_mismatch_reported_not_raised():
    bad = [Claim("baseline", frozenset({"Q"}), frozenset({"M"}), frozenset({"X"}), False)]
    res = verify_claims(bad)
    assert not res[0].passed
    assert "MISMATCH" in res[0].describe()


def test_describe_lines_readable():
    lines = [r.describe() for r in verify_claims()]
    assert lines[0] == "ok: baseline: Q vs M given {X} -> independent"
    assert any("informational" in l for l in lines)


def test_scm_mechanism_key_check():
    d = Dag(("a", "b"), [("a", "b")])
    with pytest.raises(MechanismMismatch):
        ScmSpec(d, {"a": lambda p, r, n: r.random(n)})
    with pytest.raises(MechanismMismatch):
        ScmSpec(
            d,
            {
                "a": lambda p, r, n: r.random(n),
                "b": lambda p, r, n: p["a"],
                "c": lambda p, r, n: r.random(n),
            },
        )


def test_simulate_shapes_and_determinism():
    scm = builtin_scms()["baseline_sim"]
    f1 = simulate(scm, 500, seed=4)
    f2 = simulate(scm, 500, seed=4)
    f3 = simulate(scm, 500, seed=5)
    assert f1.n == 500
    for v in scm.dag.nodes:
        assert f1[v].shape == (500,)
        assert np.array_equal(f1[v], f2[v])
    assert not np.array_equal(f1["Q"], f3["Q"])
    with pytest.raises(UnknownNode):
        f1["nope"]


def test_simulate_mechanism_shape_enforced():
    d = Dag(("a",), [])
    scm = ScmSpec(d, {"a": lambda p, r, n: r.random(n + 1)})
    with pytest.raises(MechanismMismatch):
        simulate(scm, 10)


def test_simulate_respects_parent_values():
    d = Dag(("a", "b"), [("a", "b")])
    scm = ScmSpec(
        d,
        {"a": lambda p, r, n: r.integers(0, 5, size=n), "b": lambda p, r, n: p["a"] * 2},
    )
    f = simulate(scm, 100, seed=1)
    assert np.array_equal(f["b"], f["a"] * 2)


def test_frame_csv_round_trip(tmp_path):
    f = simulate(builtin_scms()["baseline_sim"], 20, seed=0)
    p = tmp_path / "frame.csv"
    write_frame_csv(f, p)
    lines = p.read_text().splitlines()
    assert lines[0] == ",".join(f.columns)
    assert len(lines) == 21
    # integer columns serialize without a decimal point
    x_col = lines[1].split(",")[list(f.columns).index("X")]
    assert "." not in x_col


def test_within_stratum_auc_null_and_signal():
    rng = np.random.default_rng(2)
    n = 6000
    x = rng.integers(0, 10, size=n)
    m = (rng.random(n) < 0.5).astype(np.int64)
    q_null = rng.random(n)
    f = SampleFrame({"X": x, "M": m, "Q": q_null}, n)
    assert abs(within_stratum_auc(f) - 0.5) < 0.03
    q_sig = m + 0.5 * rng.random(n)
    f2 = SampleFrame({"X": x, "M": m, "Q": q_sig}, n)
    assert within_stratum_auc(f2) > 0.9


def test_within_stratum_auc_skips_single_class():
    f = SampleFrame(
        {
            "X": np.array([0, 0, 1, 1]),
            "M": np.array([1, 1, 0, 1]),
            "Q": np.array([0.1, 0.9, 0.2, 0.8]),
        },
        4,
    )
    # stratum 0 is all-correct and skipped; stratum 1 has AUC 1
    assert within_stratum_auc(f) == 1.0
    f_bad = SampleFrame({"X": np.zeros(4), "M": np.ones(4), "Q": np.arange(4.0)}, 4)
    with pytest.raises(NoValidStrata):
        within_stratum_auc(f_bad)


def test_ace_zero_when_outcome_constant_per_stratum():
    # M fully determined by X: every within-stratum difference is exactly 0
    rng = np.random.default_rng(3)
    n = 2000
    x = rng.integers(0, 7, size=n)
    f = SampleFrame({"X": x, "M": (x % 2).astype(np.float64), "Q": rng.random(n)}, n)
    res = ace_estimate(f)
    assert res.effect == 0.0
    assert res.strata_used + res.strata_dropped == 7


def test_ace_detects_direct_effect():
    rng = np.random.default_rng(4)
    n = 20_000
    x = rng.integers(0, 5, size=n)
    q = rng.random(n)
    m = (rng.random(n) < np.where(q > 0.5, 0.8, 0.2)).astype(np.float64)
    f = SampleFrame({"X": x, "M": m, "Q": q}, n)
    res = ace_estimate(f)
    assert res.effect == pytest.approx(0.6, abs=0.03)


def test_ace_invariant_to_stratum_relabeling():
    rng = np.random.default_rng(5)
    n = 3000
    x = rng.integers(0, 20, size=n)
    q = rng.random(n)
    m = (rng.random(n) < 0.4).astype(np.float64)
    f1 = SampleFrame({"X": x, "M": m, "Q": q}, n)
    # permute stratum labels; same partition, so identical effect bit for bit
    perm = np.random.default_rng(6).permutation(20)
    f2 = SampleFrame({"X": perm[x], "M": m, "Q": q}, n)
    r1, r2 = ace_estimate(f1), ace_estimate(f2)
    assert r1.effect == r2.effect
    assert (r1.strata_used, r1.strata_dropped) == (r2.strata_used, r2.strata_dropped)


def test_ace_multi_column_adjustment():
    rng = np.random.default_rng(7)
    n = 4000
    x1 = rng.integers(0, 4, size=n)
    x2 = rng.integers(0, 3, size=n)
    q = rng.random(n)
    m = (rng.random(n) < 0.5).astype(np.float64)
    f = SampleFrame({"A": x1, "B": x2, "M": m, "Q": q}, n)
    res = ace_estimate(f, adjust=("A", "B"))
    assert res.strata_used <= 12
    assert abs(res.effect) < 0.1


def test_ace_no_valid_strata():
    # constant treatment: every stratum lacks the high level
    f = SampleFrame({"X": np.zeros(10), "M": np.ones(10), "Q": np.ones(10)}, 10)
    with pytest.raises(NoValidStrata):
        ace_estimate(f)


def _stratified_permutation_p(frame, reps, seed):
    """Permutation p-value for Q-M association within X strata."""
    from iqaudit.rng import keyed_stream

    stat = abs(within_stratum_auc(frame) - 0.5)
    x = frame["X"]
    hits = 0
    for i in range(reps):
        g = keyed_stream(seed, "strat-perm", i)
        q_perm = frame["Q"].copy()
        for s in np.unique(x):
            idx = np.flatnonzero(x == s)
            q_perm[idx] = q_perm[idx[g.permutation(len(idx))]]
        f_perm = SampleFrame({"X": x, "M": frame["M"], "Q": q_perm}, frame.n)
        try:
            t = abs(within_stratum_auc(f_perm) - 0.5)
        except NoValidStrata:
            continue
        if t >= stat:
            hits += 1
    return (1 + hits) / (1 + reps)


def test_dsep_implies_uniform_permutation_p_values():
    # baseline-style SCM: Q and M independent given X, so stratified
    # permutation p-values must be uniform (KS at alpha = 0.01)
    lut_h = np.random.default_rng(8).uniform(0.25, 0.75, size=5)
    lut_g = np.random.default_rng(9).uniform(-1, 1, size=5)

    def make_frame(seed):
        rng = np.random.default_rng(seed)
        n = 400
        x = rng.integers(0, 5, size=n)
        m = (rng.random(n) < lut_h[x]).astype(np.int64)
        q = lut_g[x] + rng.standard_normal(n)
        return SampleFrame({"X": x, "M": m, "Q": q}, n)

    pvals = [_stratified_permutation_p(make_frame(1000 + t), reps=49, seed=t) for t in range(80)]
    ks = scipy.stats.kstest(pvals, "uniform")
    assert ks.pvalue > 0.01, (ks, sorted(pvals)[:5])


def test_dependent_scm_yields_small_p_values():
    def make_frame(seed):
        rng = np.random.default_rng(seed)
        n = 400
        x = rng.integers(0, 5, size=n)
        z = rng.standard_normal(n)
        q = z + 0.3 * rng.standard_normal(n)
        m = (rng.random(n) < 1.0 / (1.0 + np.exp(-2.0 * z))).astype(np.int64)
        return SampleFrame({"X": x, "M": m, "Q": q}, n)

    pvals = [_stratified_permutation_p(make_frame(2000 + t), reps=49, seed=t) for t in range(20)]
    assert np.mean(pvals) < 0.1


def test_builtin_sims_levels_at_moderate_n():
    scms = builtin_scms()
    f = simulate(scms["baseline_sim"], 200_000, seed=0)
    res = ace_estimate(f)
    assert abs(res.effect) < 0.012
    assert abs(within_stratum_auc(f) - 0.5) < 0.025
    assert res.strata_used == 200
    f2 = simulate(scms["shared_z_sim"], 200_000, seed=0)
    assert within_stratum_auc(f2) > 0.6
    assert abs(ace_estimate(f2).effect) > 0.05


def test_float_of_ace_result():
    r = AceResult(0.25, 3, 1)
    assert float(r) == 0.25

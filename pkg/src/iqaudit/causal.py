"""Causal graphs, d-separation, structural simulation, stratified effects.

The built-in graphs model how a quality score Q and a model's per-image
correctness M relate through the image X, the label Y, and the prediction
Yhat under different scoring designs. The central check is whether Q and
M are d-separated by the conditioning set (usually {X}): when they are,
any Q-M association must vanish within strata of X, and the stratified
effect of Q on M is zero.

d-separation is decided exactly by ancestral moralization (Lauritzen et
al.; see also Koller & Friedman, "Probabilistic Graphical Models", ch. 3):
restrict to ancestors of the query nodes, marry co-parents, drop
directions, delete the conditioning set, and test connectivity.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Callable, Iterable, Mapping

import numpy as np

from .errors import (
    CycleError,
    InputError,
    MechanismMismatch,
    NoValidStrata,
    UnknownNode,
)
from .predict import auc, sigmoid
from .rng import keyed_stream
from .tensorio import format_value

__all__ = [
    "Dag",
    "ScmSpec",
    "SampleFrame",
    "AceResult",
    "Claim",
    "ClaimResult",
    "d_separated",
    "builtin_dags",
    "builtin_claims",
    "verify_claims",
    "simulate",
    "builtin_scms",
    "ace_estimate",
    "within_stratum_auc",
    "write_frame_csv",
    "SIM_STRATA",
]


class Dag:
    """Directed acyclic graph over named nodes."""

    def __init__(self, nodes: Iterable[str], edges: Iterable[tuple[str, str]]):
        self.nodes: tuple[str, ...] = tuple(nodes)
        if len(set(self.nodes)) != len(self.nodes):
            raise InputError("duplicate node names")
        for v in self.nodes:
            if not isinstance(v, str) or not v:
                raise InputError(f"node names must be non-empty strings, got {v!r}")
        node_set = set(self.nodes)
        self.edges: tuple[tuple[str, str], ...] = tuple((str(a), str(e)) for a, e in edges)
        self._parents: dict[str, list[str]] = {v: [] for v in self.nodes}
        self._children: dict[str, list[str]] = {v: [] for v in self.nodes}
        seen = set()
        for a, b in self.edges:
            if a not in node_set or b not in node_set:
                raise UnknownNode(f"edge ({a}, {b}) references an unknown node")
            if a == b:
                raise CycleError(f"self-loop on {a}")
            if (a, b) in seen:
                raise InputError(f"duplicate edge ({a}, {b})")
            seen.add((a, b))
            self._parents[b].append(a)
            self._children[a].append(b)
        self._topo = self._topo_sort()

    def _topo_sort(self) -> tuple[str, ...]:
        indeg = {v: len(self._parents[v]) for v in self.nodes}
        queue = [v for v in self.nodes if indeg[v] == 0]
        order = []
        while queue:
            v = queue.pop()
            order.append(v)
            for c in self._children[v]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    queue.append(c)
        if len(order) != len(self.nodes):
            raise CycleError("edge set contains a cycle")
        return tuple(order)

    def parents(self, v: str) -> tuple[str, ...]:
        self._require(v)
        return tuple(self._parents[v])

    def children(self, v: str) -> tuple[str, ...]:
        self._require(v)
        return tuple(self._children[v])

    def topo_order(self) -> tuple[str, ...]:
        return self._topo

    def ancestors(self, of: Iterable[str]) -> set[str]:
        """Ancestral closure including the given nodes."""
        out: set[str] = set()
        stack = list(of)
        while stack:
            v = stack.pop()
            if v in out:
                continue
            self._require(v)
            out.add(v)
            stack.extend(self._parents[v])
        return out

    def _require(self, v: str) -> None:
        if v not in self._parents:
            raise UnknownNode(f"unknown node {v!r}")


def _as_node_set(dag: Dag, value, what: str) -> frozenset[str]:
    if isinstance(value, str):
        value = (value,)
    out = frozenset(value)
    for v in out:
        dag._require(v)
    if what in ("a", "b") and not out:
        raise InputError(f"query set {what!r} must be non-empty")
    return out


def d_separated(dag: Dag, a, b, z=()) -> bool:
    """Exact d-separation of node sets a and b given z (ancestral moralization)."""
    a = _as_node_set(dag, a, "a")
    b = _as_node_set(dag, b, "b")
    z = _as_node_set(dag, z, "z")
    if a & b or a & z or b & z:
        raise InputError("a, b, z must be disjoint")
    anc = dag.ancestors(a | b | z)
    adj: dict[str, set[str]] = {v: set() for v in anc}
    for v in anc:
        ps = dag._parents[v]
        for p in ps:
            adj[p].add(v)
            adj[v].add(p)
        for p1, p2 in combinations(ps, 2):
            adj[p1].add(p2)
            adj[p2].add(p1)
    blocked = set(z)
    stack = [v for v in a if v not in blocked]
    seen = set(stack)
    while stack:
        v = stack.pop()
        if v in b:
            return False
        for u in adj[v]:
            if u not in seen and u not in blocked:
                seen.add(u)
                stack.append(u)
    return True


# --------------------------------------------------------------------------
# built-in graphs and claims
# --------------------------------------------------------------------------

def builtin_dags() -> dict[str, Dag]:
    """The audit's reference graphs.

    baseline             Q computed from the image alone.
    shared_z             score and prediction share a latent Z.
    strong_tg            Q computed from the prediction itself.
    weak_tg              label-set scoring: a task node T selects the data
                         and is a common child of Y and Q.
    nr_iqa               no-reference metric with a human-calibration node.
    fr_iqa               full-reference metric with a pristine source X0.
    common_corruptions   corruption kind/severity generate the image.
    baseline_latents     per-path latents between X and Yhat / X and Q.
    """
    base = [("A", "X"), ("X", "Y"), ("X", "Yhat"), ("X", "Q"), ("Y", "M"), ("Yhat", "M")]
    return {
        "baseline": Dag(("A", "X", "Y", "Yhat", "Q", "M"), base),
        "shared_z": Dag(
            ("A", "X", "Z", "Y", "Yhat", "Q", "M"),
            [("A", "X"), ("X", "Z"), ("X", "Y"), ("Z", "Yhat"), ("Z", "Q"), ("Y", "M"), ("Yhat", "M")],
        ),
        "strong_tg": Dag(
            ("A", "X", "Y", "Yhat", "Q", "M"),
            [("A", "X"), ("X", "Y"), ("X", "Yhat"), ("Yhat", "Q"), ("Y", "M"), ("Yhat", "M")],
        ),
        "weak_tg": Dag(
            ("A", "X", "Y", "Yhat", "Q", "M", "T"),
            base + [("Y", "T"), ("Q", "T")],
        ),
        "nr_iqa": Dag(("A", "X", "Y", "Yhat", "Q", "M", "H"), base + [("H", "Q")]),
        "fr_iqa": Dag(
            ("A", "X", "X0", "Y", "Yhat", "Q", "M", "H"),
            base + [("H", "Q"), ("X0", "X"), ("X0", "Q")],
        ),
        "common_corruptions": Dag(
            ("C", "S", "X0", "X", "Y", "Yhat", "Q", "M"),
            [("C", "X"), ("S", "X"), ("X0", "X"), ("X", "Y"), ("X", "Yhat"), ("X", "Q"), ("Y", "M"), ("Yhat", "M")],
        ),
        "baseline_latents": Dag(
            ("A", "X", "Z_yhat", "Z_q", "Y", "Yhat", "Q", "M"),
            [
                ("A", "X"),
                ("X", "Y"),
                ("X", "Z_yhat"),
                ("X", "Z_q"),
                ("Z_yhat", "Yhat"),
                ("Z_q", "Q"),
                ("Y", "M"),
                ("Yhat", "M"),
            ],
        ),
    }


@dataclass(frozen=True)
class Claim:
    dag: str
    a: frozenset[str]
    b: frozenset[str]
    z: frozenset[str]
    expected: bool
    informational: bool = False


@dataclass(frozen=True)
class ClaimResult:
    dag: str
    a: frozenset[str]
    b: frozenset[str]
    z: frozenset[str]
    expected: bool
    actual: bool
    passed: bool
    informational: bool = False

    def describe(self) -> str:
        sep = "independent" if self.actual else "dependent"
        status = "ok" if self.passed else "MISMATCH"
        extra = " (informational)" if self.informational else ""
        cond = ",".join(sorted(self.z))
        return f"{status}: {self.dag}: Q vs M given {{{cond}}} -> {sep}{extra}"


def builtin_claims() -> list[Claim]:
    """Eight primary separation claims plus one informational variant.

    The weak_tg graph is checked with the task node T in the conditioning
    set (the data is selected on T, so conditioning on it is implied);
    the {X}-only reading is evaluated and reported as informational.
    """
    q, m = frozenset({"Q"}), frozenset({"M"})
    x = frozenset({"X"})
    xt = frozenset({"X", "T"})
    return [
        Claim("baseline", q, m, x, True),
        Claim("shared_z", q, m, x, False),
        Claim("strong_tg", q, m, x, False),
        Claim("weak_tg", q, m, xt, False),
        Claim("nr_iqa", q, m, x, True),
        Claim("fr_iqa", q, m, x, True),
        Claim("common_corruptions", q, m, x, True),
        Claim("baseline_latents", q, m, x, True),
        Claim("weak_tg", q, m, x, True, informational=True),
    ]


def verify_claims(claims: list[Claim] | None = None) -> list[ClaimResult]:
    """Evaluate each claim against its graph; passed = (actual == expected)."""
    dags = builtin_dags()
    results = []
    for c in claims if claims is not None else builtin_claims():
        if c.dag not in dags:
            raise UnknownNode(f"unknown built-in dag {c.dag!r}")
        actual = d_separated(dags[c.dag], c.a, c.b, c.z)
        results.append(
            ClaimResult(c.dag, c.a, c.b, c.z, c.expected, actual, actual == c.expected, c.informational)
        )
    return results


# --------------------------------------------------------------------------
# structural simulation
# --------------------------------------------------------------------------

Mechanism = Callable[[Mapping[str, np.ndarray], np.random.Generator, int], np.ndarray]


@dataclass
class ScmSpec:
    """A DAG plus one generating function per node.

    Each mechanism receives exactly its node's parent columns (so its
    argument set equals the DAG parents by construction), a dedicated
    keyed Generator, and the row count.
    """

    dag: Dag
    mechanisms: dict[str, Mechanism]

    def __post_init__(self):
        if set(self.mechanisms) != set(self.dag.nodes):
            missing = set(self.dag.nodes) - set(self.mechanisms)
            extra = set(self.mechanisms) - set(self.dag.nodes)
            raise MechanismMismatch(f"missing mechanisms {sorted(missing)}, unknown {sorted(extra)}")


@dataclass
class SampleFrame:
    """Columnar sample: one equal-length array per node."""

    columns: dict[str, np.ndarray]
    n: int

    def __getitem__(self, name: str) -> np.ndarray:
        if name not in self.columns:
            raise UnknownNode(f"no column {name!r}")
        return self.columns[name]


def simulate(scm: ScmSpec, n: int, seed: int = 0) -> SampleFrame:
    """Ancestral sampling in topological order; per-node keyed streams."""
    if n < 0:
        raise InputError(f"n must be >= 0, got {n}")
    values: dict[str, np.ndarray] = {}
    for v in scm.dag.topo_order():
        parent_vals = {p: values[p] for p in scm.dag.parents(v)}
        col = np.asarray(scm.mechanisms[v](parent_vals, keyed_stream(seed, "scm", v), n))
        if col.shape != (n,):
            raise MechanismMismatch(f"mechanism for {v!r} returned shape {col.shape}, want ({n},)")
        values[v] = col
    return SampleFrame({v: values[v] for v in scm.dag.nodes}, n)


def write_frame_csv(frame: SampleFrame, path: str | Path) -> None:
    names = list(frame.columns)
    cols = [frame.columns[v] for v in names]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(names) + "\n")
        for i in range(frame.n):
            cells = [
                str(int(c[i])) if np.issubdtype(c.dtype, np.integer) else format_value(float(c[i]))
                for c in cols
            ]
            fh.write(",".join(cells) + "\n")


SIM_STRATA = 200
_N_CLASSES = 10


def _lut(name: str, salt: str, size: int = SIM_STRATA) -> np.ndarray:
    return keyed_stream("builtin-scm", name, salt).random(size)


def builtin_scms() -> dict[str, ScmSpec]:
    """Two reference simulators on the baseline and shared_z graphs.

    baseline_sim: X is uniform over SIM_STRATA strata; the prediction is
    correct with a per-stratum probability h(X) and Q = g(X) + noise with
    g, h independent hash-derived lookup tables, so Q and M are independent
    within every stratum. shared_z_sim: a latent Z = u(X) + noise drives
    both Q = Z + noise and the correctness probability sigmoid(k (Z - 1/2)),
    so Q predicts M within strata.
    """
    lut_y = (keyed_stream("builtin-scm", "baseline", "y").random(SIM_STRATA) * _N_CLASSES).astype(np.int64)
    lut_h = 0.2 + 0.6 * _lut("baseline", "h")
    lut_g = _lut("baseline", "g")

    def a_uniform(p, rng, n):
        return rng.random(n)

    def x_stratum(p, rng, n):
        return np.minimum((p["A"] * SIM_STRATA).astype(np.int64), SIM_STRATA - 1)

    def y_class(p, rng, n):
        return lut_y[p["X"]]

    def yhat_noisy(p, rng, n):
        x = p["X"]
        y = lut_y[x]
        correct = rng.random(n) < lut_h[x]
        shift = rng.integers(1, _N_CLASSES, size=n)
        return np.where(correct, y, (y + shift) % _N_CLASSES)

    def m_match(p, rng, n):
        return (p["Yhat"] == p["Y"]).astype(np.int64)

    def q_stratum(p, rng, n):
        # means compressed to [0.375, 0.625] with wide uniform noise so the
        # global-median split is well populated inside every stratum
        return 0.5 + 0.25 * (lut_g[p["X"]] - 0.5) + 0.9 * (rng.random(n) - 0.5)

    baseline = ScmSpec(
        builtin_dags()["baseline"],
        {"A": a_uniform, "X": x_stratum, "Y": y_class, "Yhat": yhat_noisy, "M": m_match, "Q": q_stratum},
    )

    lut_u = _lut("shared-z", "u")
    lut_y2 = (keyed_stream("builtin-scm", "shared-z", "y").random(SIM_STRATA) * _N_CLASSES).astype(np.int64)

    def z_latent(p, rng, n):
        return lut_u[p["X"]] + 1.0 * rng.standard_normal(n)

    def y_class2(p, rng, n):
        return lut_y2[p["X"]]

    def yhat_score(p, rng, n):
        return sigmoid(2.5 * (p["Z"] - 0.5))

    def m_bernoulli(p, rng, n):
        return (rng.random(n) < p["Yhat"]).astype(np.int64)

    def q_latent(p, rng, n):
        return p["Z"] + 0.3 * rng.standard_normal(n)

    shared = ScmSpec(
        builtin_dags()["shared_z"],
        {"A": a_uniform, "X": x_stratum, "Z": z_latent, "Y": y_class2, "Yhat": yhat_score, "M": m_bernoulli, "Q": q_latent},
    )
    return {"baseline_sim": baseline, "shared_z_sim": shared}


# --------------------------------------------------------------------------
# stratified effect estimate
# --------------------------------------------------------------------------

def within_stratum_auc(
    frame: SampleFrame,
    score: str = "Q",
    outcome: str = "M",
    stratum: str = "X",
) -> float:
    """Mean ranking AUC of outcome given score within each stratum.

    Strata where the outcome is single-class are skipped. Under
    within-stratum independence this averages to 0.5.
    """
    q = np.asarray(frame[score], dtype=np.float64)
    m = np.asarray(frame[outcome])
    strat = np.asarray(frame[stratum])
    aucs = []
    for s in np.unique(strat):
        mask = strat == s
        if np.unique(m[mask]).size < 2:
            continue
        aucs.append(auc(q[mask], m[mask]))
    if not aucs:
        raise NoValidStrata("no stratum contains both outcome classes")
    return float(np.mean(aucs))


@dataclass(frozen=True)
class AceResult:
    effect: float
    strata_used: int
    strata_dropped: int

    def __float__(self) -> float:
        return self.effect


def ace_estimate(
    frame: SampleFrame,
    treatment: str = "Q",
    outcome: str = "M",
    adjust: tuple[str, ...] = ("X",),
) -> AceResult:
    """Stratified difference of outcome means, treatment median-binned.

    The treatment is split at its median into high (> median) and low.
    Within each stratum of the adjustment columns the high-low difference
    of outcome means is taken; strata with only one treatment level are
    dropped and counted. The result is the stratum-size weighted average,
    exactly invariant to stratum relabeling (fsum accumulation).
    """
    q = np.asarray(frame[treatment], dtype=np.float64)
    m = np.asarray(frame[outcome], dtype=np.float64)
    if not adjust:
        raise InputError("need at least one adjustment column")
    cols = [np.asarray(frame[c]) for c in adjust]
    if frame.n == 0:
        raise NoValidStrata("empty frame")
    hi = q > np.median(q)
    key = np.stack(cols, axis=1)
    _, strat = np.unique(key, axis=0, return_inverse=True)
    n_strata = int(strat.max()) + 1
    cell = strat * 2 + hi
    counts = np.bincount(cell, minlength=2 * n_strata).astype(np.int64)
    sums = np.bincount(cell, weights=m, minlength=2 * n_strata)
    contributions = []
    weights = []
    dropped = 0
    for s in range(n_strata):
        n_lo, n_hi = counts[2 * s], counts[2 * s + 1]
        if n_lo == 0 or n_hi == 0:
            dropped += 1
            continue
        diff = sums[2 * s + 1] / n_hi - sums[2 * s] / n_lo
        w = float(n_lo + n_hi)
        contributions.append(w * diff)
        weights.append(w)
    if not weights:
        raise NoValidStrata("no stratum contains both treatment levels")
    effect = math.fsum(contributions) / math.fsum(weights)
    return AceResult(effect, len(weights), dropped)

import io
import logging
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats as sps

from cascadex.cascades import InitiatorCounts, cascade_initiators, extract_trees, infer_cascade_forest, \
    build_diffusion_lists, influence_degree
from cascadex.stats import (EmpiricalDistribution, ScoreTable, TopKThresholds, average_ranks, ccdf, cdf,
                            correlate_scores, distribution_compare, load_scores, pearson, spearman,
                            topk_summary)
from conftest import URL

TOPK_LABELS = [
    "Popularity: in-degree > 10^3",
    "Sociability: out-degree > 10^3",
    "Nodes in the largest k-core",
    'Source node ("patient-zero"): Number of cascades',
    "Source node: number of cascades with cascade size > 10^3",
    "influence-degree > 10^3",
]


def test_ccdf_examples():
    assert EmpiricalDistribution([1, 2, 2, 5]).ccdf_at(2) == 0.75
    assert ccdf([3, 3, 3]) == [(3.0, 1.0)]
    assert EmpiricalDistribution([1, 2, 3]).ccdf_at(3) == pytest.approx(1 / 3)
    with pytest.raises(ValueError):
        ccdf([])


def test_ccdf_strict_convention():
    assert EmpiricalDistribution([1, 2, 2, 5], geq=False).ccdf_at(2) == 0.25
    assert ccdf([1, 2, 2, 5], geq=False) == [(1.0, 0.75), (2.0, 0.25), (5.0, 0.0)]


@given(st.lists(st.integers(0, 20), min_size=1, max_size=40))
def test_ccdf_points_monotone_and_counted(values):
    pts = ccdf(values)
    assert pts[0][1] == 1.0
    assert all(a[1] > b[1] for a, b in zip(pts, pts[1:]))
    for x, f in pts:
        assert f == sum(v >= x for v in values) / len(values)
    assert cdf(values)[-1][1] == 1.0


def test_distribution_compare_examples():
    assert distribution_compare([1, 2, 3], [1, 2, 3]) == 0.0
    assert distribution_compare([0, 0], [1, 1]) == 1.0
    assert distribution_compare([1, 2], [1, 3]) == 0.5
    with pytest.raises(ValueError):
        distribution_compare([], [1])


@settings(max_examples=60)
@given(st.lists(st.floats(-5, 5), min_size=1, max_size=30), st.lists(st.floats(-5, 5), min_size=1, max_size=30))
def test_distribution_compare_matches_ks(a, b):
    with np.errstate(divide="ignore"):
        ref = sps.ks_2samp(a, b, method="asymp").statistic    # only the statistic is compared
    assert distribution_compare(a, b) == pytest.approx(ref, abs=1e-12)


def test_pearson_examples():
    assert pearson([1, 2, 3], [2, 4, 6])[0] == 1.0
    assert pearson([1, 2, 3], [3, 2, 1])[0] == -1.0
    assert pearson([1, 2, 3, 4], [1, 3, 2, 4])[0] == pytest.approx(0.8, abs=1e-12)
    with pytest.raises(ValueError):
        pearson([1, 1, 1], [1, 2, 3])


def test_spearman_examples():
    assert spearman([1, 2, 3, 4], [2, 5, 7, 100])[0] == 1.0
    assert spearman([1, 2, 3, 4], [1, 3, 2, 4])[0] == pytest.approx(0.8, abs=1e-12)
    assert average_ranks([1, 2, 2, 4]).tolist() == [1, 2.5, 2.5, 4]
    r = spearman([1, 2, 3, 4], [1, 2, 2, 4])[0]
    assert r == pytest.approx(pearson([1, 2, 3, 4], [1, 2.5, 2.5, 4])[0], abs=1e-12)
    with pytest.raises(ValueError):
        spearman([1, 2, 3], [5, 5, 5])


@settings(max_examples=60)
@given(st.lists(st.tuples(st.integers(0, 9), st.floats(-100, 100, allow_subnormal=False)), min_size=3, max_size=40))
def test_correlations_match_scipy(pairs):
    x = np.array([a for a, _ in pairs], dtype=float)
    y = np.array([b for _, b in pairs], dtype=float)
    if np.ptp(x) == 0 or np.ptp(y) == 0 or np.std(y) < 1e-6:
        return
    r, p = pearson(x, y)
    ref = sps.pearsonr(x, y)
    assert r == pytest.approx(ref.statistic, abs=1e-9)
    assert p == pytest.approx(ref.pvalue, abs=1e-7)
    rs, ps = spearman(x, y)
    ref = sps.spearmanr(x, y)
    assert rs == pytest.approx(ref.statistic, abs=1e-9)
    assert ps == pytest.approx(ref.pvalue, abs=1e-7)


def test_permutation_p_value_is_seeded():
    x = [1, 2, 3, 4, 5, 6]
    y = [2, 1, 4, 3, 6, 5]
    a = pearson(x, y, method="permutation", n_permutations=500, seed=3)
    b = pearson(x, y, method="permutation", n_permutations=500, seed=3)
    assert a == b and 0 < a[1] <= 1


def test_load_scores_clamps(tmp_path, caplog):
    p = tmp_path / "s.csv"
    p.write_text("user,score\na,0.5\nb,1.7\nc,-2\n")
    with caplog.at_level(logging.WARNING):
        s = load_scores(p)
    assert s.scores == {"a": 0.5, "b": 1.0, "c": 0.0}
    assert "clamped" in caplog.text
    p.write_text("name,value\n")
    with pytest.raises(ValueError):
        load_scores(p)


def test_correlate_scores():
    influence = {f"u{i}": 100 + i for i in range(1, 11)} | {"low": 5}
    scores = {u: 1.0 / d for u, d in influence.items()}
    rep = correlate_scores(ScoreTable(scores), influence, threshold=100)
    assert rep.n == 10 and rep.pearson[0] < 0 and rep.spearman[0] == -1.0
    with pytest.raises(ValueError, match="need 3"):
        correlate_scores(scores, influence, threshold=10_000)
    flat = correlate_scores({u: 0.5 for u in influence}, influence, threshold=100)
    assert flat.pearson is None and flat.spearman is None and flat.notes
    assert flat.rows()[2] == ("pearson", "undefined", "undefined")


def test_correlate_restricted_population():
    influence = {f"u{i}": 200 + i for i in range(6)}
    scores = {u: float(i) for i, u in enumerate(influence)}
    rep = correlate_scores(scores, influence, threshold=100, population=["u0", "u1", "u2"])
    assert rep.n == 3


def test_topk_worked(worked):
    log, _, multi, simple = worked
    forest = infer_cascade_forest(build_diffusion_lists(log)[URL], simple)
    trees = extract_trees(forest)
    multi.nodes.spreader[:] = True
    n = multi.n_nodes
    table = topk_summary(multi.nodes, np.bincount(multi.dst, minlength=n), np.bincount(multi.src, minlength=n),
                         {"A": 1, "B": 1, "C": 1, "D": 1}, cascade_initiators(trees, threshold=2),
                         influence_degree([forest]), TopKThresholds(1, 1, 0))
    rows = {m: (t, e) for m, t, e in table.rows}
    assert rows["Source node: number of cascades with cascade size > 2"] == (1, 0)
    assert rows['Source node ("patient-zero"): Number of cascades'] == (1, 0)
    assert rows["influence-degree > 0"] == (1, 1)
    assert rows["Nodes in the largest k-core"] == (1, 1)


def test_topk_labels_and_zero_metrics(worked):
    _, _, multi, _ = worked
    zeros = np.zeros(multi.n_nodes, dtype=np.int64)
    table = topk_summary(multi.nodes, zeros, zeros, {}, InitiatorCounts(1000, Counter(), Counter()), {})
    assert [r[0] for r in table.rows] == TOPK_LABELS
    assert all(r[1:] == (0, 0) for r in table.rows)
    buf = io.StringIO()
    table.write_csv(buf)
    assert buf.getvalue().splitlines()[0] == "metric,trolls,ego_net"
    assert table.format().splitlines()[0].startswith("Metrics")


def test_topk_missing_metric(worked):
    _, _, multi, _ = worked
    zeros = np.zeros(multi.n_nodes, dtype=np.int64)
    with pytest.raises(ValueError, match="missing upstream metric: coreness"):
        topk_summary(multi.nodes, zeros, zeros, None, InitiatorCounts(1000, Counter(), Counter()), {})


@settings(max_examples=60)
@given(st.lists(st.tuples(st.integers(-20, 20), st.integers(-20, 20)), min_size=3, max_size=25),
       st.floats(0.5, 4), st.floats(-10, 10))
def test_correlation_symmetry_and_invariance(pairs, scale, shift):
    x = np.array([a for a, _ in pairs], dtype=float)
    y = np.array([b for _, b in pairs], dtype=float)
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        return
    r = pearson(x, y)[0]
    assert pearson(y, x)[0] == pytest.approx(r, abs=1e-12)
    assert pearson(scale * x + shift, y)[0] == pytest.approx(r, abs=1e-9)
    rs = spearman(x, y)[0]
    assert spearman(y, x)[0] == pytest.approx(rs, abs=1e-12)
    assert spearman(np.exp(x / 10), y)[0] == pytest.approx(rs, abs=1e-12)


@given(st.lists(st.integers(0, 3000), min_size=4, max_size=4), st.integers(0, 3000), st.integers(1, 500))
def test_topk_monotone_in_thresholds(deg, base, step):
    from cascadex.graph import NodeTable
    nodes = NodeTable(["a", "b", "c", "d"], np.array([2, 2, 1, 1], dtype=np.uint8), np.ones(4, dtype=bool))
    deg = np.array(deg)
    infl = dict(zip("abcd", deg.tolist()))
    init = Counter({"a": 2, "c": 1})

    def table(t):
        sizes = InitiatorCounts(t, init, Counter({"a": int(t < 1500)}))
        return topk_summary(nodes, deg, deg[::-1], {"a": 1}, sizes, infl, TopKThresholds(t, t, t)).rows

    lo, hi = table(base), table(base + step)
    for r1, r2 in zip(lo, hi):
        assert r2[1] <= r1[1] and r2[2] <= r1[2]

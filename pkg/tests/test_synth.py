import filecmp

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cascadex.cascades import infer_forests, influence_degree
from cascadex.graph import build_multigraph, degree_profile, project_simple
from cascadex.ingest import load_troll_registry, parse_event_stream
from cascadex.shares import ShareTable
from cascadex.stats import ccdf
from cascadex.synth import InfeasibleScenario, ScenarioParams, generate, plant, read_ground_truth

SMALL = dict(n_real=300, n_trolls=5, n_urls=6, tree_size_max=40, noise_events=800, noise_shares=200)


def recover(files):
    log, rep = parse_event_stream(files.events)
    assert rep.error_count == 0
    reg = load_troll_registry(files.registry)
    g = build_multigraph(log, reg)
    shares = ShareTable.from_log(log)
    truth = read_ground_truth(files.ground_truth)
    codes = [k for k, u in enumerate(shares.urls) if u.startswith("http://planted.")]
    forests = infer_forests(shares, project_simple(g), codes)
    return g, forests, truth


def test_same_seed_byte_identical(tmp_path):
    a = generate(ScenarioParams(seed=9, **SMALL), tmp_path / "a")
    b = generate(ScenarioParams(seed=9, **SMALL), tmp_path / "b")
    for x, y in zip(vars(a).values(), vars(b).values()):
        assert filecmp.cmp(x, y, shallow=False)
    c = generate(ScenarioParams(seed=10, **SMALL), tmp_path / "c")
    assert not filecmp.cmp(a.events, c.events, shallow=False)


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_event_count_exact(tmp_path, seed):
    tiny = {**SMALL, "n_real": 30, "n_urls": 2, "tree_size_max": 8}
    params = ScenarioParams(seed=seed, **tiny)
    planted = len(plant(ScenarioParams(seed=seed, **{**tiny, "noise_events": 0})).events)
    _, rep = parse_event_stream(generate(params, tmp_path).events)
    assert rep.error_count == 0
    assert rep.events == planted + params.noise_events + params.noise_shares


def test_no_trolls(tmp_path):
    files = generate(ScenarioParams(seed=1, **{**SMALL, "n_trolls": 0}), tmp_path)
    assert len(load_troll_registry(files.registry)) == 0
    g, forests, truth = recover(files)
    assert not g.nodes.is_troll.any()
    assert all(u.startswith("u") for f in forests for u in f.sharers)


def test_planted_50_node_tree(tmp_path):
    rng = np.random.default_rng(4)
    shape = [-1] + [int(rng.integers(0, i)) for i in range(1, 50)]
    files = generate(ScenarioParams(seed=3, n_real=400, tree_shapes=[shape], singletons_per_url=0), tmp_path)
    _, forests, truth = recover(files)
    (f,) = forests
    assert len(f.parent_map) == 49 and len(f.sharers) == 50
    assert f.parent_map == truth[f.url]


@settings(max_examples=8, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_planted_recovery(tmp_path_factory, seed):
    files = generate(ScenarioParams(seed=seed, **SMALL), tmp_path_factory.mktemp("s"))
    _, forests, truth = recover(files)
    for f in forests:
        assert f.parent_map == truth.get(f.url, {})
    sizes_minus_one = sum(len(m) for m in truth.values())
    assert sum(influence_degree(forests).values()) == sizes_minus_one


def test_infeasible_tree_larger_than_pool():
    with pytest.raises(InfeasibleScenario):
        plant(ScenarioParams(n_real=10, n_trolls=0, tree_shapes=[[-1] + list(range(20))]))


@pytest.mark.parametrize("bad", [dict(n_real=-1), dict(activity_exponent=1.0), dict(horizon=0),
                                 dict(tree_size_min=5, tree_size_max=3), dict(tree_shapes=[[0, 0]])])
def test_invalid_params(bad):
    with pytest.raises(InfeasibleScenario):
        plant(ScenarioParams(**bad))


def test_degree_distribution_heavy_tailed(tmp_path):
    maxima = []
    for n in (500, 5000):
        files = generate(ScenarioParams(seed=2, n_real=n, n_urls=0, noise_events=10 * n, noise_shares=0),
                         tmp_path / str(n))
        g = build_multigraph(parse_event_stream(files.events)[0], load_troll_registry(files.registry))
        out = degree_profile(g).out_multi
        pts = ccdf(out[out > 0])
        assert all(a[1] > b[1] for a, b in zip(pts, pts[1:]))
        maxima.append(int(out.max()))
        assert out.max() > 20 * np.median(out[out > 0])
    assert maxima[1] > maxima[0]


def test_scores_decrease_with_influence():
    sc = plant(ScenarioParams(seed=5, **SMALL))
    hi = [sc.scores[u] for u, d in sc.influence.items() if d >= 3]
    lo = [sc.scores[u] for u in sc.users if u not in sc.influence]
    assert np.mean(hi) < np.mean(lo)

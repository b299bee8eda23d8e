import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from treksep.cluster import (ClusterError, _components, clusters_from_votes,
                             find_pure_clusters, fraction_size, largest_pure_subcluster,
                             purity, tetrad_votes)
from treksep.data import CovMatrix, Dataset
from treksep.experiment import (ExperimentConfig, ExperimentError, rows_to_csv, rows_to_json,
                                run_experiment)
from treksep.graph import PathDiagram
from treksep.models import impure_two_factor_graph, impure_two_factor_model
from treksep.rng import make_rng
from treksep.sem import draw_model, linear_model, population_cov, simulate
from treksep.stats import sample_corr, screen_correlations


def pure_factors(sizes, cross=None):
    latents = [f"L{i + 1}" for i in range(len(sizes))]
    measured, edges, k = [], [], 1
    for lat, size in zip(latents, sizes):
        for _ in range(size):
            measured.append(f"X{k}")
            edges.append((lat, f"X{k}"))
            k += 1
    if cross:
        edges += cross
    return PathDiagram.from_lists(latents, measured, edges)


# -- clustering ---------------------------------------------------------------

def test_impure_two_factor_recovery():
    free = impure_two_factor_model()
    for seed in (1, 3, 6):
        m = draw_model(free, seed)
        d = simulate(m, 20_000, 100 + seed).select(m.graph.measured)
        assert screen_correlations(sample_corr(d)).accepted
        res = find_pure_clusters(d)
        assert len(res.clusters) == 2
        for c in res.clusters:
            assert not {"X1", "X6"} <= set(c)
            assert "X10" not in c
            assert purity(c, m) == 1.0
        assert "X10" in res.discarded


def test_three_variables_gives_empty_result():
    d = Dataset(("a", "b", "c"), make_rng(0).standard_normal((50, 3)))
    res = find_pure_clusters(d)
    assert res.clusters == () and res.discarded == ("a", "b", "c")


def test_two_pure_factors_recovered():
    g = pure_factors([5, 5], cross=[("L1", "L2")])
    truth = {tuple(f"X{k}" for k in range(1, 6)), tuple(f"X{k}" for k in range(6, 11))}
    rng = make_rng(77)
    exact = 0
    for rep in range(50):
        coefs = {e: float(rng.uniform(0.5, 2.0)) for e in g.edges}
        coefs[("L1", "L2")] = float(rng.uniform(0.25, 1.0))
        d = simulate(linear_model(g, coefs), 5000, 1000 + rep).select(g.measured)
        exact += set(find_pure_clusters(d, alpha=0.01).clusters) == truth
    assert exact >= 45


def test_exact_oracle_recovers_partition():
    g = pure_factors([4, 5], cross=[("L1", "L2")])
    coefs = {e: 1.0 + 0.1 * k for k, e in enumerate(g.edges)}
    s = population_cov(linear_model(g, coefs)).restrict(g.measured)
    res = find_pure_clusters(s, method="exact")
    assert set(res.clusters) == {("X1", "X2", "X3", "X4"), ("X5", "X6", "X7", "X8", "X9")}
    assert res.discarded == ()


def test_wishart_needs_sample_size():
    s = CovMatrix(("a", "b", "c", "d"), np.eye(4))
    with pytest.raises(ClusterError):
        find_pure_clusters(s)
    with pytest.raises(ClusterError):
        tetrad_votes(CovMatrix(s.names, s.matrix, n=10), method="other")


def test_one_missing_vote_is_tolerated():
    votes = np.ones((5, 5))
    votes[1, 3] = votes[3, 1] = 0.5
    assert clusters_from_votes(votes, 0.95) == ([[0, 1, 2, 3, 4]], [])


def test_bridge_variable_is_discarded():
    votes = np.eye(7)
    for group in ([0, 1, 2], [3, 4, 5]):
        for a in group:
            for b in group:
                votes[a, b] = 1.0
    votes[6, 2] = votes[2, 6] = votes[6, 3] = votes[3, 6] = 1.0
    assert clusters_from_votes(votes, 0.95) == ([[0, 1, 2], [3, 4, 5]], [6])


def test_pruning_and_size_floor():
    votes = np.eye(6)
    for a, b in [(0, 1), (0, 2), (1, 2), (2, 3), (4, 5)]:
        votes[a, b] = votes[b, a] = 1.0
    clusters, dropped = clusters_from_votes(votes, 0.95)
    assert clusters == [[0, 1, 2]]
    assert dropped == [3, 4, 5]


@given(st.integers(0, 10**6), st.floats(0.5, 0.95), st.floats(0.0, 0.5))
@settings(max_examples=40, deadline=None)
def test_raising_threshold_never_merges(seed, low, gap):
    rng = make_rng(seed)
    p = 8
    v = rng.uniform(0.4, 1.0, (p, p))
    votes = (v + v.T) / 2
    np.fill_diagonal(votes, 1.0)
    high = min(low + gap, 1.0)
    adj_low = votes >= low
    np.fill_diagonal(adj_low, False)
    comps = _components(list(range(p)), adj_low)
    for c in clusters_from_votes(votes, high)[0]:
        assert any(set(c) <= set(k) for k in comps)
    assert np.all((votes >= high) <= (votes >= low))


# -- metrics ------------------------------------------------------------------

def test_purity_examples():
    g = pure_factors([8, 5])
    assert purity(["X1", "X2", "X3", "X4", "X5", "X6", "X9"], g) == 6 / 7
    assert purity([f"X{k}" for k in range(1, 9)], g) == 1.0
    assert purity(["X1", "X9"], g) == 1 / 2
    with pytest.raises(ClusterError):
        purity([], g)


def test_fraction_examples():
    g = pure_factors([8, 5])
    assert fraction_size([f"X{k}" for k in range(1, 7)], g) == 6 / 8
    assert fraction_size([f"X{k}" for k in range(1, 9)], g) == 1.0
    assert fraction_size(["X9", "X10", "X11"], g) == 3 / 5
    assert fraction_size(["X1", "X9"], g) is None


def test_metrics_on_impure_truth():
    g = impure_two_factor_graph()
    # X10 has two latent parents and X1 -> X6 is a measured edge
    assert purity(["X6", "X7", "X8", "X10"], g) == 3 / 4
    assert largest_pure_subcluster(["X1", "X6"], g) == 1
    assert fraction_size(["X7", "X8", "X9"], g) == 3 / 4
    assert fraction_size(["X2", "X3"], g) == 2 / 5
    assert fraction_size(["X1", "X6"], g) is None
    with pytest.raises(Exception):
        purity(["Q"], g)


# -- experiment driver --------------------------------------------------------

SMALL = ExperimentConfig(sizes=(200,), b_values=(0.0, 0.05), d_values=(0.0,), reps=2, seed=5)


def test_experiment_deterministic_and_schedule_free():
    a = run_experiment(SMALL)
    b = run_experiment(SMALL)
    c = run_experiment(SMALL, jobs=2)
    assert rows_to_json(a) == rows_to_json(b) == rows_to_json(c)
    assert rows_to_csv(a) == rows_to_csv(c)


def test_experiment_rows():
    rows = run_experiment(SMALL)
    assert [(r.size, r.b, r.d) for r in rows] == [(200, 0.0, 0.0), (200, 0.05, 0.0)]
    for r in rows:
        assert r.reps == 2
        assert r.purity is None or 0 < r.purity <= 1
        assert r.fraction is None or 0 < r.fraction <= 1
        assert 0 <= r.median_white <= 1
    header = rows_to_csv(rows).splitlines()[0]
    assert header == "size,cubic,cluster_number,average_purity,average_fraction,median_white"


@pytest.mark.parametrize("kw", [{"reps": 0}, {"sizes": (3,)}, {"alpha": 1.5}, {"seed": -1}])
def test_experiment_config_validation(kw):
    with pytest.raises(ExperimentError):
        ExperimentConfig(**kw)


def test_screen_exhaustion_reported():
    # linear draws fail the screen most of the time, so one attempt per rep runs out
    cfg = ExperimentConfig(sizes=(50,), reps=5, max_attempts=1, seed=0, white=False)
    with pytest.raises(ExperimentError, match="correlation screen"):
        run_experiment(cfg)

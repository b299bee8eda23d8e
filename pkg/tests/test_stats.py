import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from statsmodels.stats.diagnostic import het_white

from treksep.data import CovMatrix, Dataset, DegenerateDataError
from treksep.models import single_factor_graph
from treksep.rng import make_rng
from treksep.sem import linear_model, population_cov, simulate
from treksep.stats import (TestInputError, determinant_rank_test, numerical_rank,
                           pairwise_white_pvalues, sample_corr, sample_cov,
                           sample_cov_with_se, screen_correlations, white_pair_test,
                           wishart_tetrad_test)


def factor_data(rng, n, loadings, noise=0.7):
    f = rng.standard_normal(n)
    return np.outer(f, loadings) + noise * rng.standard_normal((n, len(loadings)))


def two_factor_data(rng, n, noise=0.6):
    f1, f2 = rng.standard_normal(n), rng.standard_normal(n)
    cols = [f1, 0.8 * f1, f2, 0.9 * f2]
    return np.column_stack(cols) + noise * rng.standard_normal((n, 4))


# -- moments ------------------------------------------------------------------

def test_sample_cov_divisor():
    d = Dataset(("a", "b"), np.array([[1.0, 2.0], [3.0, 1.0], [5.0, 0.0]]))
    assert np.allclose(sample_cov(d).matrix, np.cov(d.values, rowvar=False))
    assert sample_cov(d).n == 3


def test_identical_and_opposite_columns():
    x = make_rng(0).standard_normal(50)
    assert sample_corr(Dataset(("x", "y"), np.column_stack([x, x]))).matrix[0, 1] \
        == pytest.approx(1.0, abs=1e-12)
    assert sample_corr(Dataset(("x", "y"), np.column_stack([x, -x]))).matrix[0, 1] \
        == pytest.approx(-1.0, abs=1e-12)


def test_constant_column_is_degenerate():
    with pytest.raises(DegenerateDataError, match="constant"):
        sample_corr(Dataset(("x", "c"), np.column_stack([np.arange(5.0), np.full(5, 3.0)])))
    with pytest.raises(DegenerateDataError):
        sample_cov(Dataset(("x",), np.zeros((1, 1))))


def test_simulated_lx_correlation():
    from treksep.graph import PathDiagram
    m = linear_model(PathDiagram.from_lists(["L"], ["X"], [("L", "X", 2.0)]))
    r = sample_corr(simulate(m, 1_000_000, 1)).matrix[0, 1]
    assert r == pytest.approx(2 / np.sqrt(5), abs=0.01)


def test_cov_se_matches_chunking():
    d = Dataset(("a", "b", "c"), make_rng(3).standard_normal((1000, 3)))
    whole, parts = sample_cov_with_se(d), sample_cov_with_se(d, chunk=77)
    assert np.allclose(whole.matrix, parts.matrix) and np.allclose(whole.se, parts.se)
    assert np.allclose(whole.matrix, sample_cov(d).matrix)
    assert np.all(whole.se > 0)


def test_covmatrix_symmetry_check():
    with pytest.raises(ValueError, match="symmetric"):
        CovMatrix(("a", "b"), np.array([[1.0, 0.5], [0.4, 1.0]]))


# -- numerical rank -----------------------------------------------------------

def test_numerical_rank_examples():
    assert numerical_rank(np.eye(3), 0.5) == 3
    u, v = np.array([1.0, 2.0, 3.0]), np.array([0.5, -1.0])
    assert numerical_rank(np.outer(u, v), 1e-8) == 1
    assert numerical_rank([[1, 2], [2, 4.000001]], 1e-3) == 1
    assert numerical_rank(np.zeros((2, 3)), 1e-8) == 0
    assert numerical_rank(np.full((2, 2), 1e-30), 1e-8, atol=1e-20) == 0


# -- tetrads ------------------------------------------------------------------

def test_population_tetrad_is_null_point():
    s = population_cov(linear_model(single_factor_graph(),
                                    {("L", v): c for v, c in zip("XYZW", (1, 2, 4, 8))}))
    cov = CovMatrix(s.names, s.matrix, n=200)
    res = wishart_tetrad_test(cov, ("X", "Y"), ("Z", "W"))
    assert res.statistic == 0.0 and res.p_value == 1.0


def test_wishart_rejects_cross_factor_pairing():
    rng = make_rng(12)
    hits = 0
    for _ in range(100):
        d = Dataset(("a", "b", "c", "e"), two_factor_data(rng, 1000))
        if wishart_tetrad_test(sample_cov(d), ("a", "c"), ("b", "e")).p_value < 0.01:
            hits += 1
    assert hits >= 95


def test_wishart_input_guards():
    d = Dataset(("a", "b", "c", "e"), make_rng(1).standard_normal((50, 4)))
    cov = sample_cov(d)
    with pytest.raises(TestInputError):
        wishart_tetrad_test(cov, ("a", "b"), ("b", "c"))
    with pytest.raises(TestInputError):
        wishart_tetrad_test(CovMatrix(cov.names, cov.matrix, n=4), ("a", "b"), ("c", "e"))


def test_determinant_m2_matches_tetrad_statistic():
    rng = make_rng(5)
    d = Dataset(("a", "b", "c", "e"), factor_data(rng, 600, [0.9, 0.8, 0.7, 0.6]))
    cov = sample_cov(d)
    w = wishart_tetrad_test(cov, ("a", "b"), ("c", "e"))
    det = determinant_rank_test(cov, ("a", "b"), ("c", "e"))
    assert det.statistic == pytest.approx(w.statistic, rel=1e-12, abs=1e-15)
    assert abs(det.p_value - w.p_value) < 0.02


def test_determinant_power_three_factors():
    rng = make_rng(21)
    hits = 0
    names = ("a", "b", "c", "x", "y", "z")
    for _ in range(40):
        f = rng.standard_normal((1000, 3))
        x = np.hstack([f, f @ np.array([[1, .3, 0], [0, 1, .4], [.2, 0, 1]])])
        d = Dataset(names, x + 0.7 * rng.standard_normal((1000, 6)))
        if determinant_rank_test(sample_cov(d), names[:3], names[3:]).p_value < 0.01:
            hits += 1
    assert hits >= 38


def test_determinant_two_latent_sextad_retained():
    from treksep.models import shared_latents_graph
    g = shared_latents_graph()
    rng = make_rng(33)
    kept = 0
    for rep in range(60):
        coefs = {e: float(rng.uniform(0.5, 2.0)) for e in g.edges}
        d = simulate(linear_model(g, coefs), 1000, 500 + rep)
        res = determinant_rank_test(sample_cov(d), ("X1", "X2", "X3"), ("X4", "X5", "X10"))
        kept += res.p_value > 0.01
    assert kept >= 57


def test_bootstrap_variant():
    rng = make_rng(8)
    d = Dataset(("a", "b", "c", "e"), factor_data(rng, 400, [0.9, 0.8, 0.7, 0.6]))
    cov = sample_cov(d)
    a = determinant_rank_test(cov, ("a", "b"), ("c", "e"), "bootstrap", d, 200, seed=1)
    b = determinant_rank_test(cov, ("a", "b"), ("c", "e"), "bootstrap", d, 200, seed=1)
    delta = determinant_rank_test(cov, ("a", "b"), ("c", "e"))
    assert a == b
    assert 0.5 < a.variance / delta.variance < 2.0
    with pytest.raises(TestInputError, match="seed"):
        determinant_rank_test(cov, ("a", "b"), ("c", "e"), "bootstrap", d)


def test_determinant_input_guards():
    d = Dataset(("a", "b", "c", "e"), make_rng(1).standard_normal((50, 4)))
    cov = sample_cov(d)
    with pytest.raises(TestInputError, match="square"):
        determinant_rank_test(cov, ("a", "b"), ("c",))
    with pytest.raises(TestInputError):
        determinant_rank_test(CovMatrix(cov.names, cov.matrix, n=4), ("a", "b"), ("c", "e"))


@given(st.integers(0, 10**6), st.floats(0.01, 100.0))
@settings(max_examples=40, deadline=None)
def test_scale_equivariance_and_p_range(seed, scale):
    rng = make_rng(seed)
    x = factor_data(rng, 60, [0.9, 0.8, 0.7, 0.6])
    names = ("a", "b", "c", "e")
    base = wishart_tetrad_test(sample_corr(Dataset(names, x)), ("a", "b"), ("c", "e"))
    x2 = x.copy()
    x2[:, 2] *= scale
    scaled = wishart_tetrad_test(sample_corr(Dataset(names, x2)), ("a", "b"), ("c", "e"))
    assert scaled.p_value == pytest.approx(base.p_value, abs=1e-9)
    assert 0.0 <= base.p_value <= 1.0
    det = determinant_rank_test(sample_cov(Dataset(names, x)), ("a", "b"), ("c", "e"))
    assert 0.0 <= det.p_value <= 1.0


def test_relabeling_invariance():
    rng = make_rng(4)
    d = Dataset(("a", "b", "c", "e"), factor_data(rng, 300, [0.9, 0.8, 0.7, 0.6]))
    cov = sample_cov(d)
    p1 = wishart_tetrad_test(cov, ("a", "b"), ("c", "e")).p_value
    p2 = wishart_tetrad_test(cov, ("b", "a"), ("e", "c")).p_value
    p3 = wishart_tetrad_test(cov, ("c", "e"), ("a", "b")).p_value
    assert p1 == pytest.approx(p2) == pytest.approx(p3)


# -- White test and screening -------------------------------------------------

def test_white_noiseless_linear():
    x = np.linspace(-2, 2, 50)
    res = white_pair_test(x, 2 * x)
    assert res.statistic == 0.0 and res.p_value == 1.0


def test_white_matches_statsmodels():
    rng = make_rng(17)
    for _ in range(5):
        x = rng.standard_normal(300)
        y = 0.5 * x + 0.3 * x ** 2 + rng.standard_normal(300)
        design = np.column_stack([np.ones(300), x])
        resid = y - design @ np.linalg.lstsq(design, y, rcond=None)[0]
        lm, lm_p, _, _ = het_white(resid, design)
        res = white_pair_test(x, y)
        assert res.statistic == pytest.approx(lm, rel=1e-8)
        assert res.p_value == pytest.approx(lm_p, rel=1e-6, abs=1e-12)


def test_white_median_linear_near_half():
    rng = make_rng(30)
    ps = [white_pair_test(x := rng.standard_normal(500), 0.7 * x + rng.standard_normal(500)).p_value
          for _ in range(100)]
    assert abs(np.median(ps) - 0.5) <= 0.1


def test_white_guards():
    with pytest.raises(TestInputError):
        white_pair_test(np.arange(5.0), np.arange(5.0))
    with pytest.raises(DegenerateDataError):
        white_pair_test(np.ones(20), np.arange(20.0))


def test_pairwise_white_count():
    d = Dataset(tuple("abcd"), make_rng(2).standard_normal((100, 4)))
    pv = pairwise_white_pvalues(d)
    assert pv.shape == (6,)
    assert np.all((pv >= 0) & (pv <= 1))


def _corr(r):
    return CovMatrix(("a", "b", "c"), np.array(r, dtype=float))


def test_screen_accepts_moderate():
    assert screen_correlations(_corr([[1, .2, .5], [.2, 1, -.8], [.5, -.8, 1]])).accepted


def test_screen_rejects_small_and_large():
    low = screen_correlations(_corr([[1, .05, .5], [.05, 1, .3], [.5, .3, 1]]))
    assert not low.accepted and low.offenders == (("a", "b", 0.05),)
    high = screen_correlations(_corr([[1, .95, .5], [.95, 1, .3], [.5, .3, 1]]))
    assert not high.accepted and [o[:2] for o in high.offenders] == [("a", "b")]

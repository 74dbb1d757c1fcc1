import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from crofton_lab.gamma import quadrature_scheme, sample_liouville
from crofton_lab.geodesic import GRAZING_EPS, SolverOptions, shoot_batch
from crofton_lab.metric import build_metric


def test_monte_carlo_weights(hemi):
    sc = sample_liouville(hemi, 4, seed=9)
    L = hemi.total_boundary_length
    assert len(sc) == 4
    assert np.all(sc.weights == 2 * L / 4)
    assert sc.total_mass == 2 * L
    assert sc.info() == {"kind": "montecarlo", "n": 4, "seed": 9}


def test_monte_carlo_is_seeded(tilted):
    a = sample_liouville(tilted, 1000, 123)
    b = sample_liouville(tilted, 1000, 123)
    c = sample_liouville(tilted, 1000, 124)
    assert np.array_equal(a.s, b.s) and np.array_equal(a.u, b.u)
    assert not np.array_equal(a.s, c.s)


def test_monte_carlo_ranges(tilted):
    sc = sample_liouville(tilted, 10_000, 0)
    assert np.all((sc.s >= 0) & (sc.s < tilted.total_boundary_length))
    assert np.all(np.abs(sc.u) <= 1 - GRAZING_EPS)
    assert np.allclose(np.sin(sc.theta), sc.u, rtol=0, atol=1e-15)


def test_mean_cosine(flat):
    u = sample_liouville(flat, 100_000, 2024).u
    c = np.sqrt(1 - u * u)
    se = c.std(ddof=1) / np.sqrt(len(c))
    assert abs(c.mean() - np.pi / 4) <= 3 * se


def test_sample_count_must_be_positive(flat):
    with pytest.raises(ValueError):
        sample_liouville(flat, 0, 1)


@pytest.mark.parametrize("rho, mass", [("1", 4 * np.pi), ("2/(1+x^2+y^2)", 4 * np.pi),
                                       ("3", 12 * np.pi), ("1+0.1*x", 4 * np.pi)])
@pytest.mark.parametrize("rule", ["gauss", "midpoint"])
def test_quadrature_total_mass(rho, mass, rule):
    m = build_metric(rho)
    for n_s, n_u in [(8, 8), (64, 32), (256, 128)]:
        sc = quadrature_scheme(m, n_s, n_u, rule)
        assert len(sc) == n_s * n_u
        assert sc.total_mass == pytest.approx(mass, rel=1e-12)
        assert sc.total_mass == sc.weights.sum()
        assert np.all(sc.weights > 0)


def test_quadrature_nodes(tilted):
    sc = quadrature_scheme(tilted, 16, 8)
    L = tilted.total_boundary_length
    assert np.all((sc.s > 0) & (sc.s < L))
    assert np.all(np.abs(sc.u) < 1)
    assert sc.info() == {"kind": "quadrature", "n_s": 16, "n_u": 8, "u_rule": "gauss"}


def test_quadrature_integrates_smooth_u_exactly(flat):
    # Gauss-Legendre with 16 nodes is exact for u^10 up to rounding
    sc = quadrature_scheme(flat, 8, 16)
    assert np.dot(sc.weights, sc.u**10) == pytest.approx(2 * np.pi * 2 / 11, rel=1e-13)


def test_quadrature_rejects_small_grids(flat):
    with pytest.raises(ValueError):
        quadrature_scheme(flat, 4, 64)
    with pytest.raises(ValueError):
        quadrature_scheme(flat, 64, 64, "simpson")


@settings(max_examples=25, deadline=None)
@given(st.integers(8, 300), st.integers(8, 300), st.floats(0.2, 5.0))
def test_total_mass_property(n_s, n_u, c):
    m = build_metric(f"{c!r}*(1+0.2*y)")
    sc = quadrature_scheme(m, n_s, n_u)
    assert sc.total_mass == pytest.approx(2 * m.total_boundary_length, rel=1e-12)


def exit_map_pvalues(metric, n=10_000, seed=77):
    sc = sample_liouville(metric, n, seed)
    b = shoot_batch(metric, sc.s, sc.theta, SolverOptions(max_segment_length=0.05), record=False)
    b.check()
    fresh = sample_liouville(metric, n, seed + 1)
    p_s = stats.ks_2samp(b.s_exit, fresh.s).pvalue
    p_u = stats.ks_2samp(np.sin(b.theta_exit), fresh.u).pvalue
    return p_s, p_u


@pytest.mark.parametrize("name", ["tilted", "hemisphere"])
def test_exit_map_preserves_liouville_measure(metrics, name):
    p_s, p_u = exit_map_pvalues(metrics[name])
    assert p_s > 0.01 and p_u > 0.01


def test_exit_map_check_detects_wrong_measure(tilted):
    # uniform theta is not Liouville: the exit angles keep that bias
    rng = np.random.default_rng(5)
    theta = rng.uniform(-1.5, 1.5, 10_000)
    s = rng.uniform(0, tilted.total_boundary_length, 10_000)
    b = shoot_batch(tilted, s, theta, SolverOptions(max_segment_length=0.05), record=False)
    fresh = sample_liouville(tilted, 10_000, 6)
    assert stats.ks_2samp(np.sin(b.theta_exit), fresh.u).pvalue < 1e-6

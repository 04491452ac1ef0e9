"""Monte-Carlo rate harness: constants, determinism, and derived means."""
import numpy as np
import pytest

from glcloud.continuum import PolyhedralFunction
from glcloud.domain import (BoxDomain, ProductPolynomialDensity,
                            UniformDensity)
from glcloud.kernel import (FeatureProjection, InteractionKernel,
                            KernelProfile)
from glcloud.ratelab import (RateConfig, constant_V, mc_bias, mc_mse,
                             single_pair_mean)

import oracles

# closed form for the d=2 pair constant, cross-checked against adaptive
# quadrature of (pi^2/2) * int_0^1 P(|Z_2| > t)^2 dt to 1e-15
V2_EXACT = 4 * np.pi / 3 - 128 / 45


def ball_kernel(d):
    return InteractionKernel(FeatureProjection.weighted_euclidean([1.0] * d),
                             KernelProfile("indicator"))


def halfspace_config(n_grid=(1000,), eps_grid=(0.2,), R=50, seed=0, threads=1):
    dom = BoxDomain.unit_cube(2)
    rho = UniformDensity(dom)
    mu = PolyhedralFunction([([-1.0, 0.0], -0.5)], dom)  # 1 on {x1 >= 1/2}
    return RateConfig(mu=mu, rho=rho, kernel=ball_kernel(2), n_grid=n_grid,
                      eps_grid=eps_grid, replications=R, base_seed=seed,
                      threads=threads)


def test_constant_v_d1_matches_analytic():
    est, se = constant_V(1, mc_samples=400_000, seed=0)
    assert abs(est - 2 / 3) < 3 * se
    assert se < 0.005
    # deterministic in the seed
    est2, se2 = constant_V(1, mc_samples=400_000, seed=0)
    assert est == est2 and se == se2


def test_constant_v_d2_matches_closed_form():
    est, se = constant_V(2, mc_samples=400_000, seed=1)
    assert abs(est - V2_EXACT) < 4 * se


def test_constant_v_two_seeds_consistent():
    a, sa = constant_V(2, mc_samples=200_000, seed=10)
    b, sb = constant_V(2, mc_samples=200_000, seed=11)
    assert abs(a - b) < 3 * np.hypot(sa, sb)
    with pytest.raises(ValueError):
        constant_V(0)


def test_rate_config_validation():
    dom = BoxDomain.unit_cube(2)
    rho = UniformDensity(dom)
    mu = PolyhedralFunction.half_space([1.0, 0.0], 0.5, dom)
    with pytest.raises(ValueError):
        RateConfig(mu=mu, rho=rho, kernel=ball_kernel(2), n_grid=(100,),
                   eps_grid=(0.1,), replications=1)
    with pytest.raises(ValueError):
        RateConfig(mu=mu, rho=rho, kernel=ball_kernel(2), n_grid=(),
                   eps_grid=(0.1,), replications=5)
    hat = InteractionKernel(FeatureProjection.weighted_euclidean([1.0, 1.0]),
                            KernelProfile("hat"))
    with pytest.raises(ValueError):
        RateConfig(mu=mu, rho=rho, kernel=hat, n_grid=(100,),
                   eps_grid=(0.1,), replications=5)
    # extended flag lifts the restriction
    RateConfig(mu=mu, rho=rho, kernel=hat, n_grid=(100,), eps_grid=(0.1,),
               replications=5, extended=True)
    poly = ProductPolynomialDensity(dom, [[1.0, 1.0], [1.0]])
    with pytest.raises(ValueError):
        RateConfig(mu=mu, rho=poly, kernel=ball_kernel(2), n_grid=(100,),
                   eps_grid=(0.1,), replications=5)


def test_empty_labeling_all_zero():
    dom = BoxDomain.unit_cube(2)
    cfg = RateConfig(mu=PolyhedralFunction.empty(dom),
                     rho=UniformDensity(dom), kernel=ball_kernel(2),
                     n_grid=(200,), eps_grid=(0.1,), replications=3)
    rep = mc_bias(cfg, mc_v_samples=10_000)
    assert rep.tv == 0.0
    for row in rep.rows:
        assert row.mean == 0.0 and row.bias == 0.0 and row.mse == 0.0
    assert rep.bias_indistinguishable


def test_bias_report_is_deterministic_and_thread_invariant():
    cfg1 = halfspace_config(R=6, seed=5, threads=1)
    cfg2 = halfspace_config(R=6, seed=5, threads=2)
    rep1 = mc_bias(cfg1, mc_v_samples=20_000)
    rep2 = mc_bias(cfg2, mc_v_samples=20_000)
    assert rep1.to_csv() == rep2.to_csv()
    rep3 = mc_bias(halfspace_config(R=6, seed=5, threads=1), mc_v_samples=20_000)
    assert rep1.to_csv() == rep3.to_csv()


def test_halfspace_mean_matches_boundary_corrected_value():
    # On the open unit square the kernel ball is clipped laterally near the
    # top and bottom edges; integrating the deficit exactly gives
    # E[GTV_n] = 4/3 - eps/2 for the unbiased normalization at every n.
    cfg = halfspace_config(n_grid=(1000,), eps_grid=(0.2,), R=100, seed=2)
    rep = mc_bias(cfg, mc_v_samples=20_000)
    row = rep.rows[0]
    expected = 4 / 3 - 0.2 / 2
    assert abs(row.mean - expected) < 3 * row.se
    # the deficit is real: mean is far below the continuum value
    assert row.bias < -5 * row.se
    assert not rep.bias_indistinguishable


def test_single_pair_exchangeability():
    cfg = halfspace_config(n_grid=(500,), eps_grid=(0.2,), R=80, seed=7)
    rep = mc_bias(cfg, mc_v_samples=20_000)
    row = rep.rows[0]
    pair_mean, pair_se = single_pair_mean(cfg, 500, 0.2, samples=400_000)
    assert abs(row.mean - pair_mean) < 3 * np.hypot(row.se, pair_se)


def test_fast_path_matches_direct_oracle():
    # reproduce the replication's sampling stream and evaluate the unbiased
    # graph TV by the brute-force double sum
    from glcloud.ratelab import _rep_gtv
    dom = BoxDomain.unit_cube(2)
    rho = UniformDensity(dom)
    mu = PolyhedralFunction([([-1.0, 0.0], -0.5)], dom)
    n, eps, base_seed, gi, rep = 300, 0.15, 42, 0, 3
    got = _rep_gtv((mu, rho, ball_kernel(2), n, eps, base_seed, gi, rep))
    rng = np.random.Generator(np.random.PCG64(
        np.random.SeedSequence(base_seed, spawn_key=(gi, rep))))
    pts = rho.sample(n, rng)
    labels = mu.indicator(pts)
    ref = oracles.brute_pairs(pts.tolist(), labels.tolist(), eps,
                              oracles.eta_ball, "gtv-unbiased")
    assert got == pytest.approx(ref, rel=1e-12)


def test_mse_report_structure_and_reduced_prediction():
    cfg = halfspace_config(n_grid=(500, 1000), eps_grid=(0.2, 0.1), R=40,
                           seed=9)
    rep = mc_mse(cfg, mc_v_samples=50_000)
    assert len(rep.rows) == 4
    assert rep.kappa1 == pytest.approx(4.0 * 1.0 * rep.v_constant)
    assert rep.kappa2 == pytest.approx(2.0 * rep.tv)
    for row in rep.rows:
        assert row.alpha == 0.0 and not row.alpha_fitted  # single face
        pred = rep.kappa1 / (row.n * row.eps) + rep.kappa2 / (row.n ** 2 * row.eps ** 3)
        assert row.pred_reduced == pytest.approx(pred, rel=1e-12)
        assert row.mse > 0
    csv = rep.to_csv()
    assert csv.splitlines()[0].startswith("n,eps,mean")
    assert len(csv.splitlines()) == 5
    s = rep.summary()
    assert set(s) >= {"tv", "kappa1", "kappa2", "slope", "rows"}


def test_mse_fitted_alpha_for_corner_set():
    dom = BoxDomain.unit_cube(2)
    corner = PolyhedralFunction.axis_box([0.5, 0.5], [1.0, 1.0], dom)
    cfg = RateConfig(mu=corner, rho=UniformDensity(dom), kernel=ball_kernel(2),
                     n_grid=(500,), eps_grid=(0.2, 0.1), replications=10,
                     base_seed=3)
    rep = mc_mse(cfg, mc_v_samples=10_000)
    assert all(row.alpha_fitted for row in rep.rows)
    assert rep.boundary_measure == pytest.approx(1.0, abs=1e-9)


def test_mse_scaling_in_n():
    # when the kappa_1 term dominates, doubling n roughly halves the MSE
    cfg = halfspace_config(n_grid=(500, 1000), eps_grid=(0.25,), R=150, seed=13)
    rep = mc_mse(cfg, mc_v_samples=20_000)
    by_n = {row.n: row.mse for row in rep.rows}
    ratio = by_n[1000] / by_n[500]
    assert 0.35 < ratio < 0.65

"""Monte-Carlo rate harness: bias and mean-square error of the graph total
variation of a fixed polyhedral labeling against its continuum value.

All replications are independently seeded from a base seed through spawn
keys (grid index, replication index), so every table is bit-reproducible
and replications parallelize without ordering effects.
"""
from __future__ import annotations

import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from glcloud import _backend
from glcloud.continuum import QuadratureSpec, continuum_tv
from glcloud.kernel import eval_kernel, support_radius


def _ball_volume(d):
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)


def constant_V(d, mc_samples=1_000_000, seed=0):
    """(estimate, standard error) of the pair constant
    (1/2) int int over B(0,1) x B(0,1) of min(|z_d|, |y_d|) dz dy.

    d=1 analytic value: 2/3."""
    if d < 1:
        raise ValueError("d must be at least 1")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))

    def ball(m):
        v = rng.standard_normal((m, d))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        r = rng.random(m) ** (1.0 / d)
        return v * r[:, None]

    z = np.abs(ball(mc_samples)[:, d - 1])
    y = np.abs(ball(mc_samples)[:, d - 1])
    vals = np.minimum(z, y) * (_ball_volume(d) ** 2 / 2.0)
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(mc_samples))


@dataclass(frozen=True)
class RateConfig:
    """Grid specification of a rate experiment."""

    mu: object                 # polyhedral labeling
    rho: object                # sampling density (uniform for the theory)
    kernel: object             # interaction kernel (ball indicator default)
    n_grid: tuple
    eps_grid: tuple
    replications: int
    base_seed: int = 0
    threads: int = 1
    extended: bool = False

    def __post_init__(self):
        if self.replications < 2:
            raise ValueError("at least 2 replications required")
        if not self.n_grid or not self.eps_grid:
            raise ValueError("grids must be nonempty")
        if not self.extended:
            from glcloud.domain import UniformDensity
            prof = self.kernel.profile
            proj = self.kernel.projection
            isotropic_ball = (prof.variant == "indicator"
                              and proj.variant == "weighted_euclidean"
                              and len(set(proj.weights)) == 1)
            if not isinstance(self.rho, UniformDensity) or not isotropic_ball:
                raise ValueError("rate formulas assume uniform density and a "
                                 "ball-indicator kernel; pass extended=True "
                                 "for exploratory runs")


def _is_fast_path(kernel):
    prof = kernel.profile
    proj = kernel.projection
    return (prof.variant == "indicator" and proj.variant == "weighted_euclidean"
            and len(set(proj.weights)) == 1)


def _rep_gtv(args):
    """One replication: unbiased-normalized graph TV of the fixed labeling."""
    mu, rho, kernel, n, eps, base_seed, grid_idx, rep = args
    rng = np.random.Generator(np.random.PCG64(
        np.random.SeedSequence(base_seed, spawn_key=(grid_idx, rep))))
    points = rho.sample(n, rng)
    labels = mu.indicator(points)
    d = points.shape[1]
    if _is_fast_path(kernel):
        w0 = kernel.projection.weights[0]
        radius = eps * kernel.profile.support / math.sqrt(w0)
        count = _backend.count_cross_pairs(points, labels.astype(np.uint8), radius)
        return 2.0 * count * eps ** (-d) / (eps * n * (n - 1))
    info = support_radius(kernel)
    cuts = np.minimum(eps * np.asarray(info.axis_radii), rho.domain.widths)
    ii, jj = _backend.neighbor_pairs(points, cuts)
    if len(ii) == 0:
        return 0.0
    w = np.atleast_1d(eval_kernel(kernel, points[ii] - points[jj], eps, d))
    return 2.0 * float(np.dot(w, np.abs(labels[ii] - labels[jj]))) / (eps * n * (n - 1))


def _run_grid(config):
    """All replications for all grid points; returns {(n, eps): array of R}."""
    tasks = []
    keys = []
    grid = [(n, eps) for n in config.n_grid for eps in config.eps_grid]
    for gi, (n, eps) in enumerate(grid):
        for rep in range(config.replications):
            tasks.append((config.mu, config.rho, config.kernel, n, eps,
                          config.base_seed, gi, rep))
        keys.append((n, eps))
    if config.threads > 1:
        with ProcessPoolExecutor(max_workers=config.threads) as ex:
            vals = list(ex.map(_rep_gtv, tasks, chunksize=4))
    else:
        vals = [_rep_gtv(t) for t in tasks]
    R = config.replications
    return {k: np.array(vals[i * R:(i + 1) * R]) for i, k in enumerate(keys)}


def single_pair_mean(config, n, eps, samples=200_000, seed_offset=10_000):
    """(mean, SE) of the single-pair statistic: the summand of the unbiased
    graph TV for one independent pair of sample points. By exchangeability
    its mean equals the mean of the full statistic."""
    rng = np.random.Generator(np.random.PCG64(
        np.random.SeedSequence(config.base_seed, spawn_key=(seed_offset,))))
    x = config.rho.sample(samples, rng)
    y = config.rho.sample(samples, rng)
    d = x.shape[1]
    lx = config.mu.indicator(x)
    ly = config.mu.indicator(y)
    w = np.atleast_1d(eval_kernel(config.kernel, x - y, eps, d))
    vals = w * np.abs(lx - ly) / eps
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(samples))


@dataclass(frozen=True)
class RateRow:
    n: int
    eps: float
    mean: float
    se: float
    bias: float
    mse: float
    mse_se: float
    pred_full: float
    pred_reduced: float
    alpha: float
    alpha_fitted: bool


@dataclass(frozen=True)
class RateReport:
    rows: tuple
    tv: float
    sigma: float
    boundary_measure: float
    v_constant: float
    v_constant_se: float
    slope: float
    bias_indistinguishable: bool
    kappa1: float
    kappa2: float

    def to_csv(self, path=None):
        buf = io.StringIO()
        buf.write("n,eps,mean,se,bias,mse,mse_se,pred_full,pred_reduced,alpha,alpha_fitted\n")
        for r in self.rows:
            buf.write(f"{r.n},{r.eps:.17g},{r.mean:.17g},{r.se:.17g},{r.bias:.17g},"
                      f"{r.mse:.17g},{r.mse_se:.17g},{r.pred_full:.17g},"
                      f"{r.pred_reduced:.17g},{r.alpha:.17g},{int(r.alpha_fitted)}\n")
        text = buf.getvalue()
        if path is not None:
            from glcloud.cli import atomic_write
            atomic_write(path, text)
        return text

    def summary(self):
        return {
            "tv": self.tv,
            "sigma": self.sigma,
            "boundary_measure": self.boundary_measure,
            "v_constant": self.v_constant,
            "v_constant_se": self.v_constant_se,
            "kappa1": self.kappa1,
            "kappa2": self.kappa2,
            "slope": self.slope,
            "bias_indistinguishable": self.bias_indistinguishable,
            "rows": len(self.rows),
        }


def _continuum_constants(config, quad=QuadratureSpec()):
    tv = continuum_tv(config.mu, config.rho, config.kernel, quad)
    from glcloud.continuum import SurfaceTension
    st = SurfaceTension(config.kernel, quad)
    boundary = sum(f.measure for f in config.mu.faces)
    sigma = st.value(config.mu.faces[0].normal) if config.mu.faces else 0.0
    return tv, sigma, boundary


def _fit_slope(eps_arr, bias_arr):
    """log-log regression slope of |bias| against eps."""
    keep = np.abs(bias_arr) > 0
    if keep.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(eps_arr[keep]), np.log(np.abs(bias_arr[keep])), 1)[0])


def mc_bias(config, quad=QuadratureSpec(), mc_v_samples=1_000_000):
    """Bias table of the unbiased graph TV against the continuum value, with
    a log-log slope fit over the eps grid at the largest n."""
    data = _run_grid(config)
    tv, sigma, boundary = _continuum_constants(config, quad)
    return _build_report(config, data, tv, sigma, boundary,
                         alpha_mode="measured", mc_v_samples=mc_v_samples)


def mc_mse(config, quad=QuadratureSpec(), alpha_zero=None, mc_v_samples=1_000_000):
    """MSE table with the full second-moment expansion and the reduced
    kappa_1/(n eps) + kappa_2/(n^2 eps^(d+1)) prediction.

    ``alpha_zero``: force the bias slot to 0 (exact for boundaries with no
    lower-dimensional edges, e.g. a single half-space face). Default: 0 when
    the labeling has at most one face, otherwise fitted c*eps (flagged).
    """
    data = _run_grid(config)
    tv, sigma, boundary = _continuum_constants(config, quad)
    if alpha_zero is None:
        alpha_zero = len(config.mu.faces) <= 1
    return _build_report(config, data, tv, sigma, boundary,
                         alpha_mode="zero" if alpha_zero else "fitted",
                         mc_v_samples=mc_v_samples)


def _build_report(config, data, tv, sigma, boundary, alpha_mode, mc_v_samples):
    d = config.rho.domain.dim
    vc, vc_se = constant_V(d, mc_v_samples, seed=config.base_seed + 1)
    kappa1 = 4.0 * boundary * vc
    kappa2 = 2.0 * tv

    R = config.replications
    means = {k: float(v.mean()) for k, v in data.items()}
    ses = {k: float(v.std(ddof=1) / math.sqrt(R)) for k, v in data.items()}

    # fitted alpha: bias ~ c * eps at the largest n
    n_max = max(config.n_grid)
    eps_arr = np.array(sorted(config.eps_grid))
    bias_at_nmax = np.array([means[(n_max, e)] - tv for e in eps_arr])
    slope = _fit_slope(eps_arr, bias_at_nmax)
    denom = float(np.sum(eps_arr ** 2))
    c_fit = float(np.sum(eps_arr * bias_at_nmax)) / denom if denom > 0 else 0.0

    indist = all(ses[k] >= abs(means[k] - tv) for k in data)

    rows = []
    for n in config.n_grid:
        for eps in config.eps_grid:
            k = (n, eps)
            vals = data[k]
            sq = (vals - tv) ** 2
            mse = float(sq.mean())
            mse_se = float(sq.std(ddof=1) / math.sqrt(R))
            if alpha_mode == "zero":
                alpha, fitted = 0.0, False
            elif alpha_mode == "fitted":
                alpha, fitted = c_fit * eps, True
            else:
                alpha, fitted = means[k] - tv, False
            nn1 = n * (n - 1)
            pred_full = (-2.0 * alpha * tv
                         + 4.0 * (n - 2) * boundary * vc / (nn1 * eps)
                         + 2.0 * tv / (nn1 * eps ** (d + 1))
                         + (n - 2) * (n - 3) * alpha ** 2 / nn1
                         + (6.0 - 4.0 * n) * tv ** 2 / nn1)
            pred_reduced = kappa1 / (n * eps) + kappa2 / (n * n * eps ** (d + 1))
            rows.append(RateRow(n=n, eps=float(eps), mean=means[k], se=ses[k],
                                bias=means[k] - tv, mse=mse, mse_se=mse_se,
                                pred_full=pred_full, pred_reduced=pred_reduced,
                                alpha=alpha, alpha_fitted=fitted))
    return RateReport(rows=tuple(rows), tv=tv, sigma=sigma,
                      boundary_measure=boundary, v_constant=vc,
                      v_constant_se=vc_se, slope=slope,
                      bias_indistinguishable=indist,
                      kappa1=kappa1, kappa2=kappa2)

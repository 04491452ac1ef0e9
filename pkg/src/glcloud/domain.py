"""Box domains, sampling densities, point clouds and the epsilon schedule."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class DensityError(ValueError):
    """Raised when a density specification violates its invariants."""


@dataclass(frozen=True)
class BoxDomain:
    """Open axis-aligned box (l_1,u_1) x ... x (l_d,u_d)."""

    lower: tuple
    upper: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lower)
        hi = tuple(float(v) for v in self.upper)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        if len(lo) != len(hi) or len(lo) == 0:
            raise ValueError("lower/upper must have equal positive length")
        if any(u <= l for l, u in zip(lo, hi)):
            raise ValueError("upper must exceed lower on every axis")

    @classmethod
    def unit_cube(cls, dim):
        return cls((0.0,) * dim, (1.0,) * dim)

    @property
    def dim(self):
        return len(self.lower)

    @property
    def widths(self):
        return np.array(self.upper) - np.array(self.lower)

    @property
    def volume(self):
        return float(np.prod(self.widths))

    @property
    def diameter(self):
        return float(np.linalg.norm(self.widths))

    def contains(self, points, strict=True):
        points = np.atleast_2d(points)
        lo = np.array(self.lower)
        hi = np.array(self.upper)
        if strict:
            return np.all((points > lo) & (points < hi), axis=1)
        return np.all((points >= lo) & (points <= hi), axis=1)

    def to_dict(self):
        return {"lower": list(self.lower), "upper": list(self.upper)}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(d["lower"]), tuple(d["upper"]))


class DensitySpec:
    """Probability density on a box domain, bounded above and strictly below.

    Subclasses provide exact normalization, pointwise evaluation and seeded
    sampling. Positivity and normalization are checked at construction.
    """

    kind = "abstract"

    def __init__(self, domain):
        self.domain = domain

    def pdf(self, points):
        raise NotImplementedError

    def bounds(self):
        """(inf, sup) of the density over the domain."""
        raise NotImplementedError

    def sample(self, n, rng):
        raise NotImplementedError

    def cdf_1d(self, x):
        raise NotImplementedError(f"{self.kind} density has no 1-d CDF")

    def quantile_1d(self, q):
        raise NotImplementedError(f"{self.kind} density has no 1-d quantile")

    def to_dict(self):
        raise NotImplementedError

    def _check_normalization(self, tol=1e-10):
        mass = self._mass()
        if abs(mass - 1.0) > tol:
            raise DensityError(f"density integrates to {mass!r}, not 1")

    def _mass(self):
        raise NotImplementedError

    @staticmethod
    def from_dict(d, domain):
        kind = d["kind"]
        if kind == "uniform":
            return UniformDensity(domain)
        if kind == "product_polynomial":
            return ProductPolynomialDensity(domain, d["coefficients"])
        if kind == "piecewise_constant":
            return PiecewiseConstantDensity(domain, d["edges"], d["values"])
        raise DensityError(f"unknown density kind {kind!r}")


class UniformDensity(DensitySpec):
    kind = "uniform"

    def __init__(self, domain):
        super().__init__(domain)
        self.normalization = 1.0 / domain.volume
        self._check_normalization()

    def pdf(self, points):
        points = np.atleast_2d(points)
        out = np.zeros(len(points))
        out[self.domain.contains(points, strict=False)] = self.normalization
        return out

    def bounds(self):
        return self.normalization, self.normalization

    def sample(self, n, rng):
        lo = np.array(self.domain.lower)
        w = self.domain.widths
        return lo + rng.random((n, self.domain.dim)) * w

    def cdf_1d(self, x):
        if self.domain.dim != 1:
            raise NotImplementedError("cdf_1d requires d = 1")
        l, u = self.domain.lower[0], self.domain.upper[0]
        return np.clip((np.asarray(x, dtype=float) - l) / (u - l), 0.0, 1.0)

    def quantile_1d(self, q):
        l, u = self.domain.lower[0], self.domain.upper[0]
        return l + np.asarray(q, dtype=float) * (u - l)

    def _mass(self):
        return self.normalization * self.domain.volume

    def to_dict(self):
        return {"kind": "uniform"}


class ProductPolynomialDensity(DensitySpec):
    """Product of per-axis polynomial densities, sampled by exact inverse CDF."""

    kind = "product_polynomial"

    def __init__(self, domain, coefficients):
        super().__init__(domain)
        self.coefficients = [np.asarray(c, dtype=float) for c in coefficients]
        if len(self.coefficients) != domain.dim:
            raise DensityError("one coefficient list per axis required")
        self._axis_norm = []
        for k, c in enumerate(self.coefficients):
            l, u = domain.lower[k], domain.upper[k]
            grid = np.linspace(l, u, 4097)
            vals = np.polynomial.polynomial.polyval(grid, c)
            if vals.min() <= 0.0:
                raise DensityError(f"axis {k} polynomial not strictly positive on the domain")
            integ = np.polynomial.polynomial.polyint(c)
            z = np.polynomial.polynomial.polyval(u, integ) - np.polynomial.polynomial.polyval(l, integ)
            self._axis_norm.append(float(z))
        self.normalization = 1.0 / float(np.prod(self._axis_norm))
        self._check_normalization()

    def _axis_pdf(self, k, t):
        return np.polynomial.polynomial.polyval(t, self.coefficients[k]) / self._axis_norm[k]

    def _axis_cdf(self, k, t):
        c = self.coefficients[k]
        integ = np.polynomial.polynomial.polyint(c)
        l = self.domain.lower[k]
        v = np.polynomial.polynomial.polyval(t, integ) - np.polynomial.polynomial.polyval(l, integ)
        return v / self._axis_norm[k]

    def pdf(self, points):
        points = np.atleast_2d(points)
        out = np.ones(len(points))
        for k in range(self.domain.dim):
            out *= self._axis_pdf(k, points[:, k])
        out[~self.domain.contains(points, strict=False)] = 0.0
        return out

    def bounds(self):
        lo_b, hi_b = 1.0, 1.0
        for k in range(self.domain.dim):
            grid = np.linspace(self.domain.lower[k], self.domain.upper[k], 4097)
            vals = self._axis_pdf(k, grid)
            lo_b *= vals.min()
            hi_b *= vals.max()
        return float(lo_b), float(hi_b)

    def _axis_quantile(self, k, q):
        # monotone CDF inverted by bisection; 90 halvings reach full precision
        q = np.asarray(q, dtype=float)
        lo = np.full_like(q, self.domain.lower[k])
        hi = np.full_like(q, self.domain.upper[k])
        for _ in range(90):
            mid = 0.5 * (lo + hi)
            below = self._axis_cdf(k, mid) < q
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        return 0.5 * (lo + hi)

    def sample(self, n, rng):
        u = rng.random((n, self.domain.dim))
        cols = [self._axis_quantile(k, u[:, k]) for k in range(self.domain.dim)]
        return np.column_stack(cols)

    def cdf_1d(self, x):
        if self.domain.dim != 1:
            raise NotImplementedError("cdf_1d requires d = 1")
        return np.clip(self._axis_cdf(0, np.asarray(x, dtype=float)), 0.0, 1.0)

    def quantile_1d(self, q):
        return self._axis_quantile(0, q)

    def _mass(self):
        # tensor Gauss-Legendre check of the analytic normalization
        mass = 1.0
        for k in range(self.domain.dim):
            x, w = np.polynomial.legendre.leggauss(64)
            l, u = self.domain.lower[k], self.domain.upper[k]
            t = 0.5 * (u - l) * x + 0.5 * (u + l)
            mass *= float(np.sum(w * self._axis_pdf(k, t)) * 0.5 * (u - l))
        return mass

    def to_dict(self):
        return {"kind": "product_polynomial", "coefficients": [list(c) for c in self.coefficients]}


class PiecewiseConstantDensity(DensitySpec):
    """Piecewise-constant density on an axis-aligned grid, rejection sampled."""

    kind = "piecewise_constant"

    def __init__(self, domain, edges, values):
        super().__init__(domain)
        self.edges = [np.asarray(e, dtype=float) for e in edges]
        if len(self.edges) != domain.dim:
            raise DensityError("one edge array per axis required")
        for k, e in enumerate(self.edges):
            if len(e) < 2 or np.any(np.diff(e) <= 0):
                raise DensityError(f"axis {k} edges must be strictly increasing")
            if not (math.isclose(e[0], domain.lower[k]) and math.isclose(e[-1], domain.upper[k])):
                raise DensityError(f"axis {k} edges must span the domain")
        raw = np.asarray(values, dtype=float)
        shape = tuple(len(e) - 1 for e in self.edges)
        if raw.shape != shape:
            raise DensityError(f"values shape {raw.shape} does not match grid {shape}")
        if raw.min() <= 0.0:
            raise DensityError("density must be bounded strictly below away from zero")
        cell_vols = np.ones(shape)
        for k, e in enumerate(self.edges):
            widths = np.diff(e)
            sl = [None] * domain.dim
            sl[k] = slice(None)
            cell_vols = cell_vols * widths[tuple(sl)]
        mass = float(np.sum(raw * cell_vols))
        self.values = raw / mass
        self.normalization = 1.0 / mass
        self._cell_vols = cell_vols
        self._check_normalization()

    def _cell_index(self, points):
        idx = []
        for k, e in enumerate(self.edges):
            i = np.clip(np.searchsorted(e, points[:, k], side="right") - 1, 0, len(e) - 2)
            idx.append(i)
        return tuple(idx)

    def pdf(self, points):
        points = np.atleast_2d(points)
        out = self.values[self._cell_index(points)]
        out[~self.domain.contains(points, strict=False)] = 0.0
        return out

    def bounds(self):
        return float(self.values.min()), float(self.values.max())

    def sample(self, n, rng, max_batches=10_000):
        hi = self.values.max()
        out = np.empty((n, self.domain.dim))
        filled = 0
        proposed = 0
        accepted = 0
        lo = np.array(self.domain.lower)
        w = self.domain.widths
        batch = max(4 * n, 1024)
        for _ in range(max_batches):
            x = lo + rng.random((batch, self.domain.dim)) * w
            u = rng.random(batch)
            keep = x[u * hi < self.pdf(x)]
            proposed += batch
            accepted += len(keep)
            take = min(len(keep), n - filled)
            out[filled:filled + take] = keep[:take]
            filled += take
            if filled == n:
                return out
            if proposed >= 10 * batch and accepted / proposed < 1e-3:
                raise DensityError(
                    f"rejection acceptance rate {accepted / proposed:.2e} below 1e-3")
        raise DensityError("rejection sampling failed to fill the requested batch")

    def cdf_1d(self, x):
        if self.domain.dim != 1:
            raise NotImplementedError("cdf_1d requires d = 1")
        e = self.edges[0]
        masses = self.values * np.diff(e)
        cum = np.concatenate(([0.0], np.cumsum(masses)))
        x = np.asarray(x, dtype=float)
        i = np.clip(np.searchsorted(e, x, side="right") - 1, 0, len(e) - 2)
        inside = cum[i] + self.values[i] * (np.clip(x, e[0], e[-1]) - e[i])
        return np.clip(inside, 0.0, 1.0)

    def quantile_1d(self, q):
        e = self.edges[0]
        masses = self.values * np.diff(e)
        cum = np.concatenate(([0.0], np.cumsum(masses)))
        q = np.asarray(q, dtype=float)
        i = np.clip(np.searchsorted(cum, q, side="right") - 1, 0, len(e) - 2)
        return e[i] + (q - cum[i]) / self.values[i]

    def _mass(self):
        return float(np.sum(self.values * self._cell_vols))

    def to_dict(self):
        return {
            "kind": "piecewise_constant",
            "edges": [list(e) for e in self.edges],
            "values": self.values.tolist(),
        }


@dataclass(frozen=True)
class PointCloud:
    """n sample locations together with their generating description."""

    points: np.ndarray
    density: DensitySpec
    domain: BoxDomain
    seed: int

    @property
    def n(self):
        return len(self.points)

    @property
    def dim(self):
        return self.points.shape[1]

    def save_csv(self, path):
        path = Path(path)
        d = self.dim
        header = ",".join(f"x{k}" for k in range(d))
        np.savetxt(path, self.points, delimiter=",", header=header, comments="", fmt="%.17g")
        meta = {
            "seed": int(self.seed),
            "n": int(self.n),
            "domain": self.domain.to_dict(),
            "density": self.density.to_dict(),
        }
        path.with_suffix(".meta.json").write_text(json.dumps(meta, indent=2) + "\n")

    @classmethod
    def load_csv(cls, path):
        path = Path(path)
        points = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        meta = json.loads(path.with_suffix(".meta.json").read_text())
        domain = BoxDomain.from_dict(meta["domain"])
        density = DensitySpec.from_dict(meta["density"], domain)
        return cls(points=points, density=density, domain=domain, seed=meta["seed"])


def sample_points(density, domain, n, seed):
    """Draw n i.i.d. points from the density; bit-identical for a fixed seed."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if density.domain != domain:
        raise ValueError("density was constructed for a different domain")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    pts = density.sample(n, rng)
    # open domain: resample the (measure-zero) event of a boundary hit
    for _ in range(100):
        bad = ~domain.contains(pts, strict=True)
        if not bad.any():
            break
        pts[bad] = density.sample(int(bad.sum()), rng)
    return PointCloud(points=pts, density=density, domain=domain, seed=int(seed))


def connectivity_rate(n, d):
    """Growth rate f_d(n): the graph is a.s. eventually connected when
    1/eps_n = o(f_d(n))."""
    if n < 3:
        raise ValueError("n must be at least 3 for the log factors")
    if d == 1:
        return math.sqrt(n / math.log(math.log(n)))
    if d == 2:
        return math.sqrt(n) / math.log(n) ** 1.5
    return (n / math.log(n)) ** (1.0 / d)


@dataclass(frozen=True)
class EpsilonSchedule:
    """Length-scale schedule eps_n, either a power rule c*n^(-beta) or a list."""

    d: int
    rule: str = "power"
    c: float = 1.0
    beta: float = 0.0
    values: tuple = field(default=())

    def __post_init__(self):
        if self.rule not in ("power", "explicit"):
            raise ValueError(f"unknown rule {self.rule!r}")
        if self.rule == "power" and (self.c <= 0 or self.beta <= 0):
            raise ValueError("power rule needs c > 0 and beta > 0")
        if self.rule == "explicit" and len(self.values) == 0:
            raise ValueError("explicit rule needs a nonempty list")

    def epsilon(self, n):
        if self.rule == "power":
            return self.c * n ** (-self.beta)
        if n > len(self.values):
            raise ValueError(f"explicit schedule has no entry for n={n}")
        return float(self.values[n - 1])


def admissible_epsilon(n, schedule):
    """(eps_n, advisory flag): does 1/eps_n = o(f_d(n)) hold along the rule?

    For power rules the o-condition reduces to beta < 1/2 (d <= 2, the log
    factors only tighten the boundary case) and beta < 1/d (d >= 3). Explicit
    lists cannot determine asymptotics, so the flag compares 1/eps_n against
    f_d(n) at the given n. The flag is advisory and never blocks.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    eps = schedule.epsilon(n)
    d = schedule.d
    if schedule.rule == "power":
        limit = 0.5 if d <= 2 else 1.0 / d
        admissible = schedule.beta < limit
    else:
        admissible = 1.0 / eps <= connectivity_rate(max(n, 3), d)
    return eps, admissible

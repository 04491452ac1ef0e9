"""Feature projections, kernel profiles and the composed interaction kernel.

The interaction kernel is eta = phi o pi with the rescaling
eta_eps(x) = eps^(-d) * eta(x / eps). A numerical verifier checks the
admissibility conditions (compact support, eta(0) > 0, and the local
domination condition with constants tending to 1 at small separation).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad


class KernelError(ValueError):
    """Raised when a kernel specification violates its invariants."""


@dataclass(frozen=True)
class FeatureProjection:
    """Map pi from displacement vectors to nonnegative features.

    Variants:
      * ``weighted_euclidean``: pi(x) = sqrt(sum_i w_i x_i^2), w_i >= 0.
      * ``quadratic_form``: pi(x) = sqrt(sum_ij W_ij |x_i||x_j|), W symmetric
        positive semidefinite.
      * ``convex_indicator``: pi(x) = 1 outside an open axis-aligned ellipsoid
        containing the origin, 0 inside.
      * ``linear``: pi(x) = w . x (signed; profiles see |pi|).
    """

    variant: str
    weights: tuple = ()
    matrix: tuple = ()
    semi_axes: tuple = ()
    direction: tuple = ()

    @classmethod
    def weighted_euclidean(cls, weights):
        w = np.asarray(weights, dtype=float)
        if w.ndim != 1 or len(w) == 0 or np.any(w < 0) or not np.any(w > 0):
            raise KernelError("weights must be nonnegative with at least one positive")
        return cls(variant="weighted_euclidean", weights=tuple(w))

    @classmethod
    def quadratic_form(cls, matrix):
        m = np.asarray(matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise KernelError("matrix must be square")
        if not np.allclose(m, m.T):
            raise KernelError("matrix must be symmetric")
        if np.linalg.eigvalsh(m).min() < -1e-12:
            raise KernelError("matrix must be positive semidefinite")
        return cls(variant="quadratic_form", matrix=tuple(map(tuple, m)))

    @classmethod
    def convex_indicator(cls, semi_axes):
        a = np.asarray(semi_axes, dtype=float)
        if a.ndim != 1 or len(a) == 0 or np.any(a <= 0):
            raise KernelError("semi-axes must be strictly positive")
        return cls(variant="convex_indicator", semi_axes=tuple(a))

    @classmethod
    def linear(cls, direction):
        w = np.asarray(direction, dtype=float)
        if w.ndim != 1 or len(w) == 0 or not np.any(w != 0):
            raise KernelError("direction must be a nonzero vector")
        return cls(variant="linear", direction=tuple(w))

    @property
    def dim(self):
        for f in (self.weights, self.matrix, self.semi_axes, self.direction):
            if len(f):
                return len(f)
        raise KernelError("projection carries no dimension")

    @property
    def one_homogeneous(self):
        """pi(t x) = t pi(x) for t > 0 (all variants except the indicator)."""
        return self.variant != "convex_indicator"

    def value(self, x):
        """pi evaluated rowwise on an (n, d) array (or a single vector)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.variant == "weighted_euclidean":
            w = np.asarray(self.weights)
            return np.sqrt(np.sum(w * x * x, axis=1))
        if self.variant == "quadratic_form":
            m = np.asarray(self.matrix)
            ax = np.abs(x)
            return np.sqrt(np.maximum(np.einsum("ni,ij,nj->n", ax, m, ax), 0.0))
        if self.variant == "convex_indicator":
            a = np.asarray(self.semi_axes)
            inside = np.sum((x / a) ** 2, axis=1) < 1.0
            return np.where(inside, 0.0, 1.0)
        w = np.asarray(self.direction)
        return x @ w

    def to_dict(self):
        d = {"kind": self.variant}
        if self.variant == "weighted_euclidean":
            d["weights"] = list(self.weights)
        elif self.variant == "quadratic_form":
            d["matrix"] = [list(r) for r in self.matrix]
        elif self.variant == "convex_indicator":
            d["semi_axes"] = list(self.semi_axes)
        else:
            d["direction"] = list(self.direction)
        return d

    @classmethod
    def from_dict(cls, d):
        kind = d["kind"]
        if kind == "weighted_euclidean":
            return cls.weighted_euclidean(d["weights"])
        if kind == "quadratic_form":
            return cls.quadratic_form(d["matrix"])
        if kind == "convex_indicator":
            return cls.convex_indicator(d["semi_axes"])
        if kind == "linear":
            return cls.linear(d["direction"])
        raise KernelError(f"unknown projection kind {kind!r}")


@dataclass(frozen=True)
class KernelProfile:
    """Nonnegative decreasing profile phi with compact support [0, support].

    Variants: ``indicator`` (1 on [0, support), 0 beyond — right-open so that
    phi vanishes at the support radius), ``hat`` (max(0, 1 - t/support)),
    ``truncated_gaussian`` (exp(-t^2) on [0, support]).
    """

    variant: str
    support: float = 1.0

    def __post_init__(self):
        if self.variant not in ("indicator", "hat", "truncated_gaussian"):
            raise KernelError(f"unknown profile {self.variant!r}")
        if self.support <= 0:
            raise KernelError("support radius must be positive")

    def value(self, t):
        t = np.abs(np.asarray(t, dtype=float))
        if self.variant == "indicator":
            return np.where(t < self.support, 1.0, 0.0)
        if self.variant == "hat":
            return np.maximum(0.0, 1.0 - t / self.support)
        return np.where(t <= self.support, np.exp(-t * t), 0.0)

    def moment(self, k):
        """Exact (or quadrature) value of int_0^inf phi(t) t^k dt."""
        M = self.support
        if self.variant == "indicator":
            return M ** (k + 1) / (k + 1)
        if self.variant == "hat":
            return M ** (k + 1) / ((k + 1) * (k + 2))
        val, _ = quad(lambda t: math.exp(-t * t) * t ** k, 0.0, M)
        return val

    def to_dict(self):
        return {"kind": self.variant, "support": self.support}

    @classmethod
    def from_dict(cls, d):
        return cls(variant=d["kind"], support=float(d.get("support", 1.0)))


@dataclass(frozen=True)
class SupportInfo:
    """Support geometry of a kernel: euclidean radius and per-axis radii."""

    bounded: bool
    radius: float
    axis_radii: tuple


@dataclass(frozen=True)
class InteractionKernel:
    """eta = phi o pi, optionally replaced by its even part.

    The energies sum |mu_i - mu_j| over ordered pairs, so replacing eta by
    (eta(x) + eta(-x)) / 2 leaves them exactly invariant while making the
    surface tension well defined; symmetrization is therefore the default.
    """

    projection: FeatureProjection
    profile: KernelProfile
    symmetrized: bool = True

    def __post_init__(self):
        if self.eta(np.zeros(self.dim)) <= 0.0:
            raise KernelError("eta(0) must be positive")

    @property
    def dim(self):
        return self.projection.dim

    def eta(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        v = self.profile.value(self.projection.value(x))
        if self.symmetrized:
            v = 0.5 * (v + self.profile.value(self.projection.value(-x)))
        return v if v.size > 1 else float(v[0])

    def to_dict(self):
        return {
            "projection": self.projection.to_dict(),
            "profile": self.profile.to_dict(),
            "symmetrize": self.symmetrized,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            projection=FeatureProjection.from_dict(d["projection"]),
            profile=KernelProfile.from_dict(d["profile"]),
            symmetrized=bool(d.get("symmetrize", True)),
        )


def eval_kernel(kernel, x, eps, d=None):
    """Rescaled kernel eps^(-d) * eta(x / eps); vectorized over rows of x."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    if d is None:
        d = kernel.dim
    x = np.asarray(x, dtype=float)
    return eps ** (-d) * kernel.eta(x / eps)


def support_radius(kernel):
    """Support geometry of eta: smallest R with eta = 0 outside B(0, R).

    Per-axis radii bound |x_k| on the support; they equal the euclidean
    radius when no tighter axis bound exists. A linear projection in d >= 2
    (or a zero weight / singular quadratic form) gives unbounded support.
    """
    proj = kernel.projection
    M = kernel.profile.support
    d = proj.dim
    inf = float("inf")
    if proj.variant == "weighted_euclidean":
        w = np.asarray(proj.weights)
        axis = tuple(M / math.sqrt(wk) if wk > 0 else inf for wk in w)
        if np.all(w > 0):
            return SupportInfo(True, M / math.sqrt(w.min()), axis)
        return SupportInfo(False, inf, axis)
    if proj.variant == "quadratic_form":
        m = np.asarray(proj.matrix)
        lam_min = float(np.linalg.eigvalsh(m).min())
        if lam_min > 1e-12:
            r = M / math.sqrt(lam_min)
            return SupportInfo(True, r, (r,) * d)
        return SupportInfo(False, inf, (inf,) * d)
    if proj.variant == "convex_indicator":
        a = np.asarray(proj.semi_axes)
        if kernel.profile.value(1.0) > 0.0:
            # phi does not vanish at feature value 1, so eta > 0 everywhere
            return SupportInfo(False, inf, (inf,) * d)
        return SupportInfo(True, float(a.max()), tuple(a))
    # linear
    w = np.asarray(proj.direction)
    if d == 1:
        r = M / abs(w[0])
        return SupportInfo(True, r, (r,))
    axis = []
    for k in range(d):
        others = np.delete(w, k)
        axis.append(M / abs(w[k]) if not np.any(others != 0) else inf)
    return SupportInfo(False, inf, tuple(axis))


@dataclass(frozen=True)
class AdmissibilityReport:
    """Outcome of the numerical admissibility check of a kernel."""

    compact_support: bool
    eta0: float
    eta0_positive: bool
    deltas: tuple
    c_values: tuple
    alpha_values: tuple
    domination_trend: bool
    passed: bool

    def summary(self):
        lines = [
            f"compact support: {'yes' if self.compact_support else 'NO'}",
            f"eta(0) = {self.eta0:.6g} ({'positive' if self.eta0_positive else 'NOT positive'})",
        ]
        for dlt, c, a in zip(self.deltas, self.c_values, self.alpha_values):
            lines.append(f"delta={dlt:g}: c={c:.4f}, alpha={a:.4f}")
        lines.append(f"domination constants trend to 1: {'yes' if self.domination_trend else 'NO'}")
        lines.append(f"admissible: {'yes' if self.passed else 'NO'}")
        return "\n".join(lines)


def check_admissibility(kernel, delta_grid, sample_count=20000, seed=0):
    """Best-effort numerical admissibility report.

    Checks compact support and eta(0) > 0 exactly, and the local domination
    condition eta(y) >= c * eta(alpha * x) for |x - y| < delta statistically:
    for each delta a grid of alpha candidates on both sides of 1 is scanned
    and c is the worst sampled ratio. The condition holds with constants
    tending to 1 when the reported (c, alpha) improve toward 1 as delta
    shrinks. Report-only: nothing is rejected here.
    """
    delta_grid = list(delta_grid)
    if not delta_grid or any(d <= 0 for d in delta_grid):
        raise ValueError("delta_grid must be nonempty and positive")
    if any(b >= a for a, b in zip(delta_grid, delta_grid[1:])):
        raise ValueError("delta_grid must be decreasing")
    info = support_radius(kernel)
    eta0 = float(kernel.eta(np.zeros(kernel.dim)))
    d = kernel.dim
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))

    c_vals, a_vals = [], []
    if info.bounded:
        R = info.radius
        for delta in delta_grid:
            # sample x in a box covering the support with margin, y near x
            x = (rng.random((sample_count, d)) * 2.0 - 1.0) * (R + delta)
            v = rng.normal(size=(sample_count, d))
            v /= np.linalg.norm(v, axis=1, keepdims=True)
            y = x + v * (rng.random((sample_count, 1)) * delta)
            eta_y = np.atleast_1d(kernel.eta(y))
            best_c, best_a = 0.0, float("nan")
            alphas = np.unique(np.concatenate([
                np.linspace(0.5, 1.0, 11),
                [1.0 / (1.0 - t) for t in (delta / (4 * R), delta / (2 * R),
                                           delta / R, 2 * delta / R)
                 if t < 0.9],
            ]))
            for alpha in alphas:
                eta_ax = np.atleast_1d(kernel.eta(alpha * x))
                active = eta_ax > 0.0
                c = 1.0 if not active.any() else float(
                    np.minimum(eta_y[active] / eta_ax[active], 1.0).min())
                # prefer the candidate whose worse coordinate is closest to 1
                if min(c, 1.0 - abs(alpha - 1.0)) > min(best_c, 1.0 - abs(best_a - 1.0) if best_a == best_a else -1.0):
                    best_c, best_a = c, float(alpha)
            c_vals.append(best_c)
            a_vals.append(best_a)
        tol = 0.15
        trend = (c_vals[-1] >= 1.0 - tol and abs(a_vals[-1] - 1.0) <= tol
                 and c_vals[-1] >= c_vals[0] - 1e-9)
    else:
        c_vals = [float("nan")] * len(delta_grid)
        a_vals = [float("nan")] * len(delta_grid)
        trend = False

    passed = info.bounded and eta0 > 0.0 and trend
    return AdmissibilityReport(
        compact_support=info.bounded,
        eta0=eta0,
        eta0_positive=eta0 > 0.0,
        deltas=tuple(delta_grid),
        c_values=tuple(c_vals),
        alpha_values=tuple(a_vals),
        domination_trend=trend,
        passed=passed,
    )

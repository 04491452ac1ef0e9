"""Independent brute-force references used only by tests.

Everything here is written from the mathematical definitions with plain
loops and dense grids, sharing no code with the optimized library paths it
validates.
"""
import itertools
import math

import numpy as np


def eta_ball(x, radius=1.0):
    """Indicator interaction: 1 strictly inside the euclidean ball."""
    return 1.0 if math.sqrt(sum(v * v for v in x)) < radius else 0.0


def make_eta_weighted(weights, profile):
    """eta = profile(sqrt(sum w_k x_k^2)) from scalar python formulas."""
    def eta(x):
        t = math.sqrt(sum(w * v * v for w, v in zip(weights, x)))
        return profile(t)
    return eta


def profile_indicator(t, support=1.0):
    return 1.0 if t < support else 0.0


def profile_hat(t, support=1.0):
    return max(0.0, 1.0 - t / support)


def brute_pairs(points, labels, eps, eta, functional="gtv-squared", V=None):
    """Direct ordered double-sum evaluation of the discrete functionals."""
    n = len(points)
    if n > 2000:
        raise ValueError("oracle capped at n = 2000")
    d = len(points[0])
    acc = 0.0
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            disp = [points[i][k] - points[j][k] for k in range(d)]
            w = eps ** (-d) * eta([v / eps for v in disp])
            acc += w * abs(labels[i] - labels[j])
    if functional == "gtv-squared":
        return acc / (eps * n * n)
    if functional == "gtv-unbiased":
        return acc / (eps * n * (n - 1))
    if functional == "gl":
        vsum = sum(V(t) for t in labels)
        return vsum / (eps * n) + acc / (eps * n * n)
    raise ValueError(functional)


def brute_edges(points, eps, eta):
    """All pairs (i < j) with positive kernel weight, with their weights."""
    n = len(points)
    d = len(points[0])
    out = []
    for i in range(n):
        for j in range(i + 1, n):
            disp = [(points[i][k] - points[j][k]) / eps for k in range(d)]
            w = eps ** (-d) * eta(disp)
            if w > 1e-12:
                out.append((i, j, w))
    return out


def pair_count(points, labels, radius):
    """Number of cross-label pairs within the euclidean radius (closed)."""
    n = len(points)
    count = 0
    for i in range(n):
        for j in range(i + 1, n):
            if labels[i] != labels[j]:
                dist = math.sqrt(sum((a - b) ** 2 for a, b in zip(points[i], points[j])))
                if dist <= radius:
                    count += 1
    return count


def enumerate_binary(n, edges, seeds, eps):
    """Exhaustive minimum of the squared-normalized TV over seeded binary
    labelings. ``edges``: (i, j, w) triples; ``seeds``: {index: label}."""
    free = [v for v in range(n) if v not in seeds]
    if len(free) > 20:
        raise ValueError("oracle capped at 20 free vertices")
    best_val = None
    best_mu = None
    base = [seeds.get(v, 0.0) for v in range(n)]
    for bits in itertools.product((0.0, 1.0), repeat=len(free)):
        mu = list(base)
        for v, b in zip(free, bits):
            mu[v] = b
        acc = sum(2.0 * w * abs(mu[i] - mu[j]) for i, j, w in edges)
        val = acc / (eps * n * n)
        if best_val is None or val < best_val:
            best_val, best_mu = val, mu
    return best_mu, best_val


def dense_sigma(eta, nu, d, radius, grid=801):
    """sigma(nu) by dense tensor-grid midpoint quadrature over the support box."""
    axes = [np.linspace(-radius, radius, grid, endpoint=False) + radius / grid
            for _ in range(d)]
    cell = (2.0 * radius / grid) ** d
    total = 0.0
    if d == 1:
        for x in axes[0]:
            total += eta([x]) * abs(x * nu[0])
    elif d == 2:
        for x in axes[0]:
            for y in axes[1]:
                e = eta([x, y])
                if e:
                    total += e * abs(x * nu[0] + y * nu[1])
    else:
        raise ValueError("dense quadrature oracle supports d <= 2")
    return total * cell


def tl1_exact_1d(points, labels, mu_callable, cdf, quantile, grid=20001):
    """Cell-wise 1-D transport integration on a dense grid.

    Builds the quantile cells from scratch and integrates both the label
    discrepancy and the displacement by midpoint quadrature in mass space
    (the map x -> quantile(u) makes rho(x) dx = du exact).
    """
    order = sorted(range(len(points)), key=lambda i: points[i])
    data = [points[i] for i in order]
    labs = [labels[i] for i in order]
    n = len(data)
    u = (np.arange(grid) + 0.5) / grid
    x = np.array([quantile(v) for v in u])
    cell = np.minimum((u * n).astype(int), n - 1)
    lab_err = 0.0
    disp = 0.0
    for k in range(grid):
        i = cell[k]
        lab_err += abs(labs[i] - mu_callable(x[k])) / grid
        disp += abs(x[k] - data[i]) / grid
    return disp, lab_err

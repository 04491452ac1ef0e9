"""Minimizers of the discrete functionals.

Binary seeded minimization is an exact s-t min-cut (on binary labelings the
diffuse-interface energy reduces to the graph cut), solved by an own Dinic
max-flow with float capacities. The soft relaxation runs projected descent
on a smoothed absolute value with smoothing continuation and restarts.
"""
from __future__ import annotations

import warnings
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from glcloud.energy import DoubleWell, LabelFunction, gl_energy, graph_tv


@dataclass(frozen=True)
class SeedConstraint:
    """Vertices pinned to a fixed binary label."""

    indices: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        lab = np.asarray(self.labels, dtype=float)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "labels", lab)
        if len(idx) != len(lab):
            raise ValueError("indices and labels must have equal length")
        if len(np.unique(idx)) != len(idx):
            raise ValueError("seed indices must be distinct")
        if not np.all((lab == 0.0) | (lab == 1.0)):
            raise ValueError("seed labels must be 0 or 1")

    @classmethod
    def from_pairs(cls, pairs):
        pairs = list(pairs)
        return cls(np.array([p[0] for p in pairs], dtype=np.int64),
                   np.array([p[1] for p in pairs], dtype=float))


@dataclass(frozen=True)
class FidelityTerm:
    """Penalty (lam / n) * sum_i |mu_i - reference_i|."""

    lam: float
    reference: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "reference", np.asarray(self.reference, dtype=float))
        if not np.isfinite(self.lam) or self.lam < 0:
            raise ValueError("fidelity weight must be finite and nonnegative")


class _Dinic:
    """Max-flow with float capacities on an explicit arc list."""

    def __init__(self, n_nodes):
        self.n = n_nodes
        self.head = [[] for _ in range(n_nodes)]
        self.to = []
        self.cap = []

    def add_edge(self, u, v, cap_uv, cap_vu=0.0):
        self.head[u].append(len(self.to))
        self.to.append(v)
        self.cap.append(cap_uv)
        self.head[v].append(len(self.to))
        self.to.append(u)
        self.cap.append(cap_vu)

    def _bfs(self, s, t):
        level = [-1] * self.n
        level[s] = 0
        dq = deque([s])
        while dq:
            u = dq.popleft()
            for e in self.head[u]:
                v = self.to[e]
                if level[v] < 0 and self.cap[e] > 1e-15:
                    level[v] = level[u] + 1
                    dq.append(v)
        return level if level[t] >= 0 else None

    def _dfs(self, s, t, level):
        it = [0] * self.n
        total = 0.0
        while True:
            # find one augmenting path iteratively
            stack = [s]
            path = []
            found = False
            while stack:
                u = stack[-1]
                if u == t:
                    found = True
                    break
                advanced = False
                while it[u] < len(self.head[u]):
                    e = self.head[u][it[u]]
                    v = self.to[e]
                    if self.cap[e] > 1e-15 and level[v] == level[u] + 1:
                        stack.append(v)
                        path.append(e)
                        advanced = True
                        break
                    it[u] += 1
                if not advanced and not found:
                    stack.pop()
                    if path:
                        e = path.pop()
                        it[self.to[e ^ 1]] += 1
                    level[u] = -1
            if not found:
                return total
            bottleneck = min(self.cap[e] for e in path)
            for e in path:
                self.cap[e] -= bottleneck
                self.cap[e ^ 1] += bottleneck
            total += bottleneck
            # restart the walk from s; saturated arcs are skipped via `it`
            for e in path:
                if self.cap[e] <= 1e-15:
                    break

    def max_flow(self, s, t):
        flow = 0.0
        while True:
            level = self._bfs(s, t)
            if level is None:
                return flow
            flow += self._dfs(s, t, level)

    def min_cut_side(self, s):
        """Vertices reachable from s in the residual network."""
        seen = np.zeros(self.n, dtype=bool)
        seen[s] = True
        dq = deque([s])
        while dq:
            u = dq.popleft()
            for e in self.head[u]:
                v = self.to[e]
                if not seen[v] and self.cap[e] > 1e-15:
                    seen[v] = True
                    dq.append(v)
        return seen


def min_cut_binary(g, seeds):
    """Exact minimizer of graph_tv over binary labelings respecting seeds."""
    if not np.any(seeds.labels == 0.0) or not np.any(seeds.labels == 1.0):
        raise ValueError("both classes must be seeded")
    if np.any(seeds.indices < 0) or np.any(seeds.indices >= g.n):
        raise ValueError("seed index out of range")

    from scipy.sparse.csgraph import connected_components
    if g.n > 1:
        ncomp, _ = connected_components(g.to_csr(), directed=False)
        if ncomp > 1:
            warnings.warn(f"graph has {ncomp} components; solving jointly "
                          "(unseeded components stay on one side)",
                          RuntimeWarning, stacklevel=2)

    inf = float(np.sum(g.weights)) * 4.0 + 1.0
    net = _Dinic(g.n + 2)
    s, t = g.n, g.n + 1
    for i, j, w in zip(g.edges_i, g.edges_j, g.weights):
        net.add_edge(int(i), int(j), float(w), float(w))
    for idx, lab in zip(seeds.indices, seeds.labels):
        if lab == 0.0:
            net.add_edge(s, int(idx), inf)
        else:
            net.add_edge(int(idx), t, inf)
    net.max_flow(s, t)
    source_side = net.min_cut_side(s)[:g.n]
    mu = np.where(source_side, 0.0, 1.0)
    mu[seeds.indices] = seeds.labels
    label = LabelFunction(mu, kind="hard")
    return label, graph_tv(g, label, g.eps, "squared")


@dataclass(frozen=True)
class RelaxParams:
    """Knobs of the smoothed relaxation solver."""

    max_iters: int = 400
    step: float = 0.25
    stages: int = 4
    restarts: int = 3
    seed: int = 0
    smoothing: float = float("nan")  # default: start at eps


@dataclass(frozen=True)
class RelaxResult:
    labels: LabelFunction
    energy: float
    trace: tuple
    stage_bounds: tuple
    restart_index: int
    params: RelaxParams
    smoothing_schedule: tuple


def _smoothed_objective_and_grad(g, vals, V, eps, fid, delta):
    n = g.n
    dv = vals[g.edges_i] - vals[g.edges_j]
    sm = np.sqrt(dv * dv + delta * delta)
    obj = float(np.sum(V.value(vals))) / (eps * n) + 2.0 * float(np.dot(g.weights, sm)) / (eps * n * n)
    if V.variant == "quartic":
        gv = 2.0 * vals * (vals - 1.0) * (2.0 * vals - 1.0)
    else:
        gv = np.where(np.abs(vals) < np.abs(vals - 1.0), np.sign(vals), np.sign(vals - 1.0))
    grad = gv / (eps * n)
    edge_g = 2.0 * g.weights * dv / sm / (eps * n * n)
    np.add.at(grad, g.edges_i, edge_g)
    np.add.at(grad, g.edges_j, -edge_g)
    if fid is not None:
        df = vals - fid.reference
        smf = np.sqrt(df * df + delta * delta)
        obj += fid.lam * float(np.sum(smf)) / n
        grad += fid.lam * (df / smf) / n
    return obj, grad


def _true_energy(g, vals, V, eps, fid):
    e = gl_energy(g, vals, V, eps)
    if fid is not None:
        e += fid.lam * float(np.sum(np.abs(vals - fid.reference))) / g.n
    return e


def relax_minimize(g, V, eps, seeds=None, fidelity=None, params=RelaxParams()):
    """Soft minimizer of the diffuse-interface energy (plus optional fidelity)
    with seeds clamped, by projected descent on the smoothed energy.

    The absolute values are smoothed to sqrt(t^2 + delta^2); delta starts at
    eps (or ``params.smoothing``) and halves once per stage. Backtracking
    keeps the smoothed objective non-increasing within each stage; the best
    restart (ties to the lowest index) is returned.
    """
    if params.max_iters <= 0 or params.step <= 0 or params.stages <= 0 or params.restarts <= 0:
        raise ValueError("solver parameters must be positive")
    n = g.n
    delta0 = params.smoothing if params.smoothing == params.smoothing else eps
    deltas = tuple(delta0 * 0.5 ** s for s in range(params.stages))
    iters_per_stage = max(1, params.max_iters // params.stages)

    def clamp(v):
        v = np.clip(v, 0.0, 1.0)
        if seeds is not None:
            v[seeds.indices] = seeds.labels
        return v

    best = None
    ss = np.random.SeedSequence(params.seed)
    children = ss.spawn(params.restarts)
    for r in range(params.restarts):
        rng = np.random.Generator(np.random.PCG64(children[r]))
        # flat 0.5 is a stationary saddle of the quartic well; nudge it
        vals = 0.5 + 1e-3 * rng.standard_normal(n) if r == 0 else rng.random(n)
        vals = clamp(vals)
        trace = []
        stage_bounds = []
        diverged = False
        for delta in deltas:
            obj, grad = _smoothed_objective_and_grad(g, vals, V, eps, fidelity, delta)
            step = params.step
            for _ in range(iters_per_stage):
                trial = clamp(vals - step * grad)
                tobj, tgrad = _smoothed_objective_and_grad(g, trial, V, eps, fidelity, delta)
                tries = 0
                while tobj > obj and tries < 30:
                    step *= 0.5
                    trial = clamp(vals - step * grad)
                    tobj, tgrad = _smoothed_objective_and_grad(g, trial, V, eps, fidelity, delta)
                    tries += 1
                if not np.isfinite(tobj):
                    diverged = True
                    break
                if tobj > obj:
                    trace.append(obj)
                    break
                vals, obj, grad = trial, tobj, tgrad
                trace.append(obj)
                step *= 1.3
            stage_bounds.append(len(trace))
            if diverged:
                break
        if diverged:
            warnings.warn(f"restart {r} diverged; discarded", RuntimeWarning,
                          stacklevel=2)
            continue
        energy = _true_energy(g, vals, V, eps, fidelity)
        if best is None or energy < best.energy:
            best = RelaxResult(labels=LabelFunction(vals.copy(), kind="soft"),
                               energy=energy, trace=tuple(trace),
                               stage_bounds=tuple(stage_bounds),
                               restart_index=r, params=params,
                               smoothing_schedule=deltas)
    if best is None:
        raise RuntimeError("all restarts diverged")
    return best


def round_labels(mu, threshold=0.5):
    """Hard labels from soft ones: 1 strictly above the threshold, ties to 0."""
    vals = mu.values if isinstance(mu, LabelFunction) else np.asarray(mu, dtype=float)
    return LabelFunction((vals > threshold).astype(float), kind="hard")


def phase_width(mu, c):
    """Fraction of vertices whose label lies strictly inside (c, 1-c)."""
    if not 0.0 < c < 0.5:
        raise ValueError("c must lie in (0, 1/2)")
    vals = mu.values if isinstance(mu, LabelFunction) else np.asarray(mu, dtype=float)
    return float(np.mean((vals > c) & (vals < 1.0 - c)))

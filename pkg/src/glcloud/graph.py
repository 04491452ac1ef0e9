"""Sparse weighted proximity graph over a point cloud via cell lists."""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.sparse import csr_matrix

from glcloud import _backend
from glcloud.kernel import eval_kernel, support_radius

WEIGHT_FLOOR = 1e-12


@dataclass(frozen=True)
class WeightedGraph:
    """Undirected graph with each edge stored once as (i < j, weight > 0).

    The continuum-scaling energies are defined through ordered double sums;
    energy code multiplies stored weights by 2 to recover them exactly.
    """

    n: int
    edges_i: np.ndarray
    edges_j: np.ndarray
    weights: np.ndarray
    eps: float
    kernel_descriptor: dict = field(default_factory=dict)
    cutoff: float = float("nan")

    def __post_init__(self):
        if len(self.edges_i) != len(self.edges_j) or len(self.edges_i) != len(self.weights):
            raise ValueError("edge arrays must have equal length")
        if len(self.edges_i) and (np.any(self.edges_i >= self.edges_j)
                                  or np.any(self.edges_i < 0)
                                  or np.any(self.edges_j >= self.n)):
            raise ValueError("edges must satisfy 0 <= i < j < n")
        if np.any(self.weights <= 0):
            raise ValueError("stored weights must be positive")

    @property
    def m(self):
        return len(self.weights)

    def to_csr(self):
        """Symmetric sparse adjacency matrix (both orientations)."""
        i = np.concatenate([self.edges_i, self.edges_j])
        j = np.concatenate([self.edges_j, self.edges_i])
        w = np.concatenate([self.weights, self.weights])
        return csr_matrix((w, (i, j)), shape=(self.n, self.n))

    def neighbors(self, v):
        """Sorted neighbor indices of vertex v with their weights."""
        mask_i = self.edges_i == v
        mask_j = self.edges_j == v
        nbrs = np.concatenate([self.edges_j[mask_i], self.edges_i[mask_j]])
        wts = np.concatenate([self.weights[mask_i], self.weights[mask_j]])
        order = np.argsort(nbrs)
        return nbrs[order], wts[order]

    def degrees(self):
        deg = np.zeros(self.n, dtype=np.int64)
        np.add.at(deg, self.edges_i, 1)
        np.add.at(deg, self.edges_j, 1)
        return deg

    def save_csv(self, path):
        path = Path(path)
        with open(path, "w") as fh:
            fh.write("i,j,weight\n")
            for a, b, w in zip(self.edges_i, self.edges_j, self.weights):
                fh.write(f"{a},{b},{w:.17g}\n")
        meta = {
            "n": int(self.n),
            "eps": float(self.eps),
            "cutoff": float(self.cutoff),
            "kernel": self.kernel_descriptor,
        }
        path.with_suffix(".meta.json").write_text(json.dumps(meta, indent=2) + "\n")

    @classmethod
    def load_csv(cls, path):
        path = Path(path)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)
            data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        meta = json.loads(path.with_suffix(".meta.json").read_text())
        if data.size == 0:
            data = np.empty((0, 3))
        return cls(
            n=meta["n"],
            edges_i=data[:, 0].astype(np.int64),
            edges_j=data[:, 1].astype(np.int64),
            weights=data[:, 2],
            eps=meta["eps"],
            kernel_descriptor=meta.get("kernel", {}),
            cutoff=meta.get("cutoff", float("nan")),
        )


def build_graph(cloud, kernel, eps):
    """Proximity graph: all pairs within the kernel support at scale eps.

    Candidate pairs come from a cell-list search with per-axis cutoffs
    eps * r_k (r_k the kernel's axis support radii, clipped to the domain
    width); weights below 1e-12 after the eps^(-d) scaling are dropped so
    sparsity stays exact for truncated profiles.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    info = support_radius(kernel)
    if not info.bounded:
        raise ValueError("kernel support is unbounded; graph would be dense "
                         "and the scaled functional undefined")
    points = cloud.points
    n, d = points.shape
    cutoff = eps * info.radius
    if cutoff > cloud.domain.diameter:
        warnings.warn("cutoff exceeds the domain diameter; graph will be dense",
                      RuntimeWarning, stacklevel=2)
    axis_cut = np.minimum(eps * np.asarray(info.axis_radii), cloud.domain.widths)
    ii, jj = _backend.neighbor_pairs(points, axis_cut)
    if len(ii):
        w = np.atleast_1d(eval_kernel(kernel, points[ii] - points[jj], eps, d))
        keep = w > WEIGHT_FLOOR
        ii, jj, w = ii[keep], jj[keep], w[keep]
    else:
        w = np.empty(0)
    order = np.lexsort((jj, ii))
    return WeightedGraph(
        n=n,
        edges_i=ii[order],
        edges_j=jj[order],
        weights=w[order],
        eps=float(eps),
        kernel_descriptor=kernel.to_dict(),
        cutoff=float(cutoff),
    )

"""Pure-numpy cell-list pair search.

Fallback used when the compiled extension ``glcloud._core`` is unavailable.
Both backends expose the same two functions and must return identical pair
sets (order of pairs is unspecified).
"""
from __future__ import annotations

import numpy as np

BACKEND_NAME = "python"


def _grid(points, cutoffs):
    """Cell geometry: per-axis cell counts and cell index of every point.

    Cell sides are at least the cutoff on each axis, so all pairs within the
    cutoff live in the same or adjacent cells.
    """
    n, d = points.shape
    lo = points.min(axis=0)
    hi = points.max(axis=0)
    extent = np.maximum(hi - lo, 1e-300)
    ncells = np.ones(d, dtype=np.int64)
    finite = np.isfinite(cutoffs) & (cutoffs > 0)
    ncells[finite] = np.maximum(1, np.floor(extent[finite] / cutoffs[finite]).astype(np.int64))
    side = extent / ncells
    idx = np.minimum((points - lo) / side, ncells - 1).astype(np.int64)
    flat = np.ravel_multi_index(tuple(idx.T), tuple(ncells))
    return ncells, idx, flat


def _half_stencil(d):
    """Offsets o in {-1,0,1}^d that are lexicographically positive."""
    offsets = []
    for o in np.ndindex(*([3] * d)):
        o = tuple(x - 1 for x in o)
        if o > tuple([0] * d):
            offsets.append(o)
    return offsets


def _cell_members(flat, n):
    order = np.argsort(flat, kind="stable")
    sorted_flat = flat[order]
    boundaries = np.flatnonzero(np.diff(sorted_flat)) + 1
    starts = np.concatenate(([0], boundaries))
    ends = np.concatenate((boundaries, [n]))
    cells = sorted_flat[starts]
    return order, cells, starts, ends


def neighbor_pairs(points, cutoffs):
    """Candidate pairs (i < j) with per-axis separation within the cutoffs.

    ``cutoffs`` is a length-d array; entries may be ``inf`` (no restriction on
    that axis). The caller is responsible for any further filtering (euclidean
    cutoff, kernel weight).
    """
    points = np.ascontiguousarray(points, dtype=np.float64)
    cutoffs = np.asarray(cutoffs, dtype=np.float64)
    n, d = points.shape
    if n < 2:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    ncells, idx, flat = _grid(points, cutoffs)
    order, cells, starts, ends = _cell_members(flat, n)
    lookup = {c: k for k, c in enumerate(cells)}
    multi = np.array(np.unravel_index(cells, tuple(ncells))).T
    offsets = _half_stencil(d)
    out_i, out_j = [], []

    def _emit(a, b, same_cell):
        pa = points[a]
        pb = points[b]
        if same_cell:
            ii, jj = np.triu_indices(len(a), k=1)
            a_idx, b_idx = a[ii], b[jj]
            diff = np.abs(pa[ii] - pb[jj])
        else:
            a_idx = np.repeat(a, len(b))
            b_idx = np.tile(b, len(a))
            diff = np.abs(pa[:, None, :] - pb[None, :, :]).reshape(-1, d)
        keep = np.ones(len(a_idx), dtype=bool)
        for k in range(d):
            if np.isfinite(cutoffs[k]):
                keep &= diff[:, k] <= cutoffs[k]
        a_idx, b_idx = a_idx[keep], b_idx[keep]
        swap = a_idx > b_idx
        lo_idx = np.where(swap, b_idx, a_idx)
        hi_idx = np.where(swap, a_idx, b_idx)
        out_i.append(lo_idx)
        out_j.append(hi_idx)

    for k, cell in enumerate(cells):
        members = order[starts[k]:ends[k]]
        _emit(members, members, same_cell=True)
        base = multi[k]
        for o in offsets:
            nb = base + np.array(o)
            if np.any(nb < 0) or np.any(nb >= ncells):
                continue
            nb_flat = int(np.ravel_multi_index(tuple(nb), tuple(ncells)))
            m = lookup.get(nb_flat)
            if m is None:
                continue
            _emit(members, order[starts[m]:ends[m]], same_cell=False)

    if not out_i:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    return np.concatenate(out_i), np.concatenate(out_j)


def count_cross_pairs(points, labels, radius):
    """Number of pairs (i < j) with |x_i - x_j| <= radius and labels differing.

    Hot path of the Monte-Carlo rate harness (ball-indicator kernel on binary
    labels); counts only, no pair materialization.
    """
    points = np.ascontiguousarray(points, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.uint8)
    n, d = points.shape
    if n < 2:
        return 0
    cutoffs = np.full(d, radius, dtype=np.float64)
    ncells, idx, flat = _grid(points, cutoffs)
    order, cells, starts, ends = _cell_members(flat, n)
    lookup = {c: k for k, c in enumerate(cells)}
    multi = np.array(np.unravel_index(cells, tuple(ncells))).T
    offsets = _half_stencil(d)
    r2 = radius * radius
    total = 0
    for k, cell in enumerate(cells):
        members = order[starts[k]:ends[k]]
        pa = points[members]
        la = labels[members]
        dist2 = ((pa[:, None, :] - pa[None, :, :]) ** 2).sum(axis=-1)
        cross = la[:, None] != la[None, :]
        total += int(np.count_nonzero(np.triu(cross & (dist2 <= r2), k=1)))
        base = multi[k]
        for o in offsets:
            nb = base + np.array(o)
            if np.any(nb < 0) or np.any(nb >= ncells):
                continue
            m = lookup.get(int(np.ravel_multi_index(tuple(nb), tuple(ncells))))
            if m is None:
                continue
            other = order[starts[m]:ends[m]]
            pb = points[other]
            lb = labels[other]
            dist2 = ((pa[:, None, :] - pb[None, :, :]) ** 2).sum(axis=-1)
            cross = la[:, None] != lb[None, :]
            total += int(np.count_nonzero(cross & (dist2 <= r2)))
    return total

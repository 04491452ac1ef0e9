# cython: language_level=3
"""Compiled cell-list pair search (hot kernels of graph build and rate lab)."""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND_NAME = "cython"


cdef inline Py_ssize_t _clampi(Py_ssize_t v, Py_ssize_t lo, Py_ssize_t hi):
    if v < lo:
        return lo
    if v > hi:
        return hi
    return v


def _grid(double[:, ::1] pts, double[::1] cutoffs):
    """Per-axis cell counts plus flattened cell index of every point."""
    cdef Py_ssize_t n = pts.shape[0]
    cdef Py_ssize_t d = pts.shape[1]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] ncells = np.ones(d, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] lo = np.empty(d)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] side = np.empty(d)
    cdef Py_ssize_t i, k
    cdef double v, mn, mx, extent
    for k in range(d):
        mn = pts[0, k]
        mx = pts[0, k]
        for i in range(1, n):
            v = pts[i, k]
            if v < mn:
                mn = v
            if v > mx:
                mx = v
        extent = mx - mn
        if extent <= 0.0:
            extent = 1e-300
        lo[k] = mn
        if cutoffs[k] > 0 and cutoffs[k] == cutoffs[k] and cutoffs[k] != float("inf"):
            ncells[k] = max(1, <cnp.int64_t>(extent / cutoffs[k]))
        side[k] = extent / ncells[k]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] flat = np.zeros(n, dtype=np.int64)
    cdef cnp.int64_t[::1] ncv = ncells
    cdef double[::1] lov = lo, sdv = side
    cdef cnp.int64_t[::1] fv = flat
    cdef Py_ssize_t c
    for i in range(n):
        for k in range(d):
            c = _clampi(<Py_ssize_t>((pts[i, k] - lov[k]) / sdv[k]), 0, ncv[k] - 1)
            if k == 0:
                fv[i] = c
            else:
                fv[i] = fv[i] * ncv[k] + c
    return ncells, flat


def neighbor_pairs(pts_in, cutoffs_in):
    """Candidate pairs (i < j) with per-axis separation within the cutoffs."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2] pts = np.ascontiguousarray(pts_in, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] cutoffs = np.ascontiguousarray(cutoffs_in, dtype=np.float64)
    cdef Py_ssize_t n = pts.shape[0]
    cdef Py_ssize_t d = pts.shape[1]
    if n < 2:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    ncells, flat = _grid(pts, cutoffs)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] order = np.argsort(flat, kind="stable")
    cdef cnp.ndarray[cnp.int64_t, ndim=1] sflat = flat[order]
    cdef cnp.int64_t[::1] ncv = ncells
    cdef cnp.int64_t[::1] ov = order
    cdef cnp.int64_t[::1] sfv = sflat
    cdef double[:, ::1] pv = pts
    cdef double[::1] cv = cutoffs

    # start index of each point's cell run, found by binary search on demand
    cdef list out_i = []
    cdef list out_j = []
    cdef cnp.ndarray[cnp.int64_t, ndim=1] buf_i = np.empty(1 << 16, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] buf_j = np.empty(1 << 16, dtype=np.int64)
    cdef cnp.int64_t[::1] bi = buf_i
    cdef cnp.int64_t[::1] bj = buf_j
    cdef Py_ssize_t nbuf = 0, cap = 1 << 16

    cdef Py_ssize_t noff = 1
    cdef Py_ssize_t k
    for k in range(d):
        noff *= 3
    cdef cnp.ndarray[cnp.int64_t, ndim=2] offs = np.empty((noff, d), dtype=np.int64)
    cdef Py_ssize_t m = 0, rem, t
    cdef bint pos
    for t in range(noff):
        pos = False
        rem = t
        for k in range(d):
            offs[m, d - 1 - k] = rem % 3 - 1
            rem //= 3
        # keep lexicographically positive offsets only
        for k in range(d):
            if offs[m, k] > 0:
                pos = True
                break
            if offs[m, k] < 0:
                break
        if pos:
            m += 1
    cdef Py_ssize_t nuse = m
    cdef cnp.int64_t[:, ::1] offv = offs

    cdef Py_ssize_t run_start = 0, run_end, other_start, other_end
    cdef Py_ssize_t a, b, ia, ib, pi, pj
    cdef cnp.int64_t cell, nb_cell
    cdef cnp.ndarray[cnp.int64_t, ndim=1] coord = np.empty(d, dtype=np.int64)
    cdef cnp.int64_t[::1] cdv = coord
    cdef double diff
    cdef bint ok
    cdef Py_ssize_t lo_s, hi_s, mid

    while run_start < n:
        cell = sfv[run_start]
        run_end = run_start
        while run_end < n and sfv[run_end] == cell:
            run_end += 1
        # decode cell coordinates
        rem = cell
        for k in range(d - 1, -1, -1):
            cdv[k] = rem % ncv[k]
            rem //= ncv[k]
        for m in range(nuse + 1):
            if m == nuse:
                other_start = run_start
                other_end = run_end
            else:
                nb_cell = 0
                ok = True
                for k in range(d):
                    t = cdv[k] + offv[m, k]
                    if t < 0 or t >= ncv[k]:
                        ok = False
                        break
                    nb_cell = nb_cell * ncv[k] + t
                if not ok:
                    continue
                # binary search the run of nb_cell
                lo_s = 0
                hi_s = n
                while lo_s < hi_s:
                    mid = (lo_s + hi_s) // 2
                    if sfv[mid] < nb_cell:
                        lo_s = mid + 1
                    else:
                        hi_s = mid
                if lo_s == n or sfv[lo_s] != nb_cell:
                    continue
                other_start = lo_s
                other_end = lo_s
                while other_end < n and sfv[other_end] == nb_cell:
                    other_end += 1
            for a in range(run_start, run_end):
                ia = ov[a]
                b = a + 1 if m == nuse else other_start
                while b < other_end:
                    ib = ov[b]
                    ok = True
                    for k in range(d):
                        diff = pv[ia, k] - pv[ib, k]
                        if diff < 0:
                            diff = -diff
                        if cv[k] == cv[k] and diff > cv[k]:
                            ok = False
                            break
                    if ok:
                        if nbuf == cap:
                            out_i.append(buf_i.copy())
                            out_j.append(buf_j.copy())
                            nbuf = 0
                        if ia < ib:
                            bi[nbuf] = ia
                            bj[nbuf] = ib
                        else:
                            bi[nbuf] = ib
                            bj[nbuf] = ia
                        nbuf += 1
                    b += 1
        run_start = run_end

    out_i.append(buf_i[:nbuf].copy())
    out_j.append(buf_j[:nbuf].copy())
    return np.concatenate(out_i), np.concatenate(out_j)


def count_cross_pairs(pts_in, labels_in, double radius):
    """Pairs (i < j) with |x_i - x_j| <= radius and differing labels."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2] pts = np.ascontiguousarray(pts_in, dtype=np.float64)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] labels = np.ascontiguousarray(labels_in, dtype=np.uint8)
    cdef Py_ssize_t n = pts.shape[0]
    cdef Py_ssize_t d = pts.shape[1]
    if n < 2:
        return 0
    cdef cnp.ndarray[cnp.float64_t, ndim=1] cutoffs = np.full(d, radius)
    ncells, flat = _grid(pts, cutoffs)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] order = np.argsort(flat, kind="stable")
    cdef cnp.ndarray[cnp.int64_t, ndim=1] sflat = flat[order]
    cdef cnp.int64_t[::1] ncv = ncells
    cdef cnp.int64_t[::1] ov = order
    cdef cnp.int64_t[::1] sfv = sflat
    cdef double[:, ::1] pv = pts
    cdef cnp.uint8_t[::1] lv = labels
    cdef double r2 = radius * radius

    cdef Py_ssize_t noff = 1
    cdef Py_ssize_t k
    for k in range(d):
        noff *= 3
    cdef cnp.ndarray[cnp.int64_t, ndim=2] offs = np.empty((noff, d), dtype=np.int64)
    cdef Py_ssize_t m = 0, rem, t
    cdef bint pos
    for t in range(noff):
        rem = t
        for k in range(d):
            offs[m, d - 1 - k] = rem % 3 - 1
            rem //= 3
        pos = False
        for k in range(d):
            if offs[m, k] > 0:
                pos = True
                break
            if offs[m, k] < 0:
                break
        if pos:
            m += 1
    cdef Py_ssize_t nuse = m
    cdef cnp.int64_t[:, ::1] offv = offs

    cdef Py_ssize_t run_start = 0, run_end, other_start, other_end
    cdef Py_ssize_t a, b, ia, ib
    cdef cnp.int64_t cell, nb_cell
    cdef cnp.ndarray[cnp.int64_t, ndim=1] coord = np.empty(d, dtype=np.int64)
    cdef cnp.int64_t[::1] cdv = coord
    cdef double diff, dist2
    cdef bint ok
    cdef Py_ssize_t lo_s, hi_s, mid
    cdef long long total = 0

    while run_start < n:
        cell = sfv[run_start]
        run_end = run_start
        while run_end < n and sfv[run_end] == cell:
            run_end += 1
        rem = cell
        for k in range(d - 1, -1, -1):
            cdv[k] = rem % ncv[k]
            rem //= ncv[k]
        for m in range(nuse + 1):
            if m == nuse:
                other_start = run_start
                other_end = run_end
            else:
                nb_cell = 0
                ok = True
                for k in range(d):
                    t = cdv[k] + offv[m, k]
                    if t < 0 or t >= ncv[k]:
                        ok = False
                        break
                    nb_cell = nb_cell * ncv[k] + t
                if not ok:
                    continue
                lo_s = 0
                hi_s = n
                while lo_s < hi_s:
                    mid = (lo_s + hi_s) // 2
                    if sfv[mid] < nb_cell:
                        lo_s = mid + 1
                    else:
                        hi_s = mid
                if lo_s == n or sfv[lo_s] != nb_cell:
                    continue
                other_start = lo_s
                other_end = lo_s
                while other_end < n and sfv[other_end] == nb_cell:
                    other_end += 1
            for a in range(run_start, run_end):
                ia = ov[a]
                b = a + 1 if m == nuse else other_start
                while b < other_end:
                    ib = ov[b]
                    if lv[ia] != lv[ib]:
                        dist2 = 0.0
                        for k in range(d):
                            diff = pv[ia, k] - pv[ib, k]
                            dist2 += diff * diff
                        if dist2 <= r2:
                            total += 1
                    b += 1
        run_start = run_end

    return int(total)

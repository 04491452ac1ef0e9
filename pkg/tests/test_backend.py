"""Backend equivalence: compiled core vs numpy fallback vs brute force."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from glcloud import _backend, _core_py

import oracles

try:
    from glcloud import _core
    HAVE_COMPILED = True
except ImportError:
    HAVE_COMPILED = False


def _brute_pairs(points, cutoffs):
    n, d = points.shape
    out = set()
    for i in range(n):
        for j in range(i + 1, n):
            ok = True
            for k in range(d):
                if np.isfinite(cutoffs[k]) and abs(points[i, k] - points[j, k]) > cutoffs[k]:
                    ok = False
                    break
            if ok:
                out.add((i, j))
    return out


@pytest.mark.parametrize("trial", range(8))
def test_neighbor_pairs_matches_brute_force(trial):
    rng = np.random.default_rng(trial)
    d = int(rng.integers(1, 4))
    n = int(rng.integers(2, 250))
    points = rng.random((n, d))
    cutoffs = np.full(d, float(rng.uniform(0.05, 0.5)))
    if trial == 7:
        cutoffs[-1] = np.inf
    expected = _brute_pairs(points, cutoffs)
    for impl in ([_core] if HAVE_COMPILED else []) + [_core_py]:
        ii, jj = impl.neighbor_pairs(points, cutoffs)
        got = set(zip(ii.tolist(), jj.tolist()))
        assert got == expected
        assert len(ii) == len(got)  # no duplicate pairs


@pytest.mark.parametrize("trial", range(6))
def test_count_cross_pairs_matches_brute_force(trial):
    rng = np.random.default_rng(100 + trial)
    d = int(rng.integers(1, 4))
    n = int(rng.integers(2, 200))
    points = rng.random((n, d))
    labels = rng.integers(0, 2, n).astype(np.uint8)
    radius = float(rng.uniform(0.05, 0.5))
    expected = oracles.pair_count(points.tolist(), labels.tolist(), radius)
    assert _core_py.count_cross_pairs(points, labels, radius) == expected
    if HAVE_COMPILED:
        assert _core.count_cross_pairs(points, labels, radius) == expected


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 60), st.integers(1, 3), st.integers(0, 10_000))
def test_backends_agree_on_random_clouds(n, d, seed):
    rng = np.random.default_rng(seed)
    points = rng.random((n, d))
    cutoffs = np.full(d, float(rng.uniform(0.05, 0.6)))
    ip, jp = _core_py.neighbor_pairs(points, cutoffs)
    pairs_py = set(zip(ip.tolist(), jp.tolist()))
    if HAVE_COMPILED:
        ic, jc = _core.neighbor_pairs(points, cutoffs)
        assert set(zip(ic.tolist(), jc.tolist())) == pairs_py
    assert all(i < j for i, j in pairs_py)


def test_selected_backend_exposes_api():
    assert _backend.BACKEND_NAME in ("cython", "python")
    assert callable(_backend.neighbor_pairs)
    assert callable(_backend.count_cross_pairs)


def test_compiled_backend_was_built():
    # the build is expected to produce the extension in this environment
    assert HAVE_COMPILED


def test_degenerate_inputs():
    empty = np.empty((0, 2))
    one = np.array([[0.5, 0.5]])
    for impl in ([_core] if HAVE_COMPILED else []) + [_core_py]:
        ii, jj = impl.neighbor_pairs(empty, np.array([0.1, 0.1]))
        assert len(ii) == 0 and len(jj) == 0
        ii, jj = impl.neighbor_pairs(one, np.array([0.1, 0.1]))
        assert len(ii) == 0
        assert impl.count_cross_pairs(one, np.array([1], dtype=np.uint8), 0.5) == 0


def test_identical_points_all_paired():
    points = np.zeros((5, 2))
    for impl in ([_core] if HAVE_COMPILED else []) + [_core_py]:
        ii, jj = impl.neighbor_pairs(points, np.array([0.1, 0.1]))
        assert len(ii) == 10

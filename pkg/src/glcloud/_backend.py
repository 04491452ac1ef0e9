"""Backend selection: compiled core if built, numpy fallback otherwise.

Set ``GLCLOUD_BACKEND=python`` to force the fallback (used by the backend
equivalence tests and the benchmark).
"""
from __future__ import annotations

import os

if os.environ.get("GLCLOUD_BACKEND") == "python":
    from glcloud import _core_py as _impl
else:
    try:
        from glcloud import _core as _impl  # type: ignore[attr-defined]
    except ImportError:
        from glcloud import _core_py as _impl

BACKEND_NAME = _impl.BACKEND_NAME
neighbor_pairs = _impl.neighbor_pairs
count_cross_pairs = _impl.count_cross_pairs

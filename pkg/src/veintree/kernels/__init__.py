"""Hot numeric kernels: compiled core with a pure-Python fallback.

The backend is picked once at import time: the Cython extension
(`veintree.kernels._native`) when it is importable, otherwise the numpy
fallback. Set VEINTREE_PURE_PYTHON=1 to force the fallback (used by the
benchmark and the backend-equivalence tests). Both backends are bit-exact
mirrors of each other, so the choice never changes pipeline output, only
speed.
"""

from __future__ import annotations

import os

if os.environ.get("VEINTREE_PURE_PYTHON", "") not in ("", "0"):
    from . import _fallback as _impl
else:
    try:
        from . import _native as _impl  # type: ignore[no-redef]
    except ImportError:
        from . import _fallback as _impl  # type: ignore[no-redef]

BACKEND: str = _impl.NAME

nearest_segment = _impl.nearest_segment
simulate_steps = _impl.simulate_steps
draw_strokes = _impl.draw_strokes

__all__ = ["BACKEND", "nearest_segment", "simulate_steps", "draw_strokes"]

"""Search kernel selection.

The compiled Cython kernel is preferred; the numpy implementation is the
fallback when the extension was not built. Both implement the identical
contract (see fallback.topk_dot). Selection happens once at import and can be
forced with PROMPTKNN_KERNEL=cython|numpy|auto.
"""

from __future__ import annotations

import os

from . import fallback

_requested = os.environ.get("PROMPTKNN_KERNEL", "auto").strip().lower() or "auto"

if _requested == "numpy":
    topk_dot = fallback.topk_dot
    BACKEND = "numpy"
elif _requested in ("auto", "cython"):
    try:
        from ._topk import topk_dot  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        if _requested == "cython":
            raise ImportError(
                "PROMPTKNN_KERNEL=cython but the compiled kernel is not built"
            )
        topk_dot = fallback.topk_dot
        BACKEND = "numpy"
else:
    raise ValueError(
        f"PROMPTKNN_KERNEL must be auto, cython, or numpy; got {_requested!r}"
    )

__all__ = ["topk_dot", "BACKEND", "fallback"]

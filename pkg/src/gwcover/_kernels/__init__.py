"""Walk kernels: compiled extension when available, pure Python otherwise.

Set ``GWCOVER_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _dgff_py, _walk_py

_walk, _dgff = _walk_py, _dgff_py
BACKEND = "python"
if os.environ.get("GWCOVER_PURE_PYTHON", "") in ("", "0"):
    try:
        from . import _dgff_ext, _walk_ext
    except ImportError:
        pass
    else:
        _walk, _dgff = _walk_ext, _dgff_ext
        BACKEND = "cython"

cover = _walk.cover
budget = _walk.budget
leaf_max = _dgff.leaf_max

__all__ = ["BACKEND", "budget", "cover", "leaf_max", "_dgff_py", "_walk_py"]

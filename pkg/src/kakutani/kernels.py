"""Backend selection for the word-tree kernels.

The compiled extension is used when it imports; otherwise (or when
``KAKUTANI_PURE_PYTHON=1``) the pure-Python module is used.  ``BACKEND`` names
the active choice.
"""
import os

from . import _pykernels

if os.environ.get("KAKUTANI_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
        BACKEND = "python"

count_tree = _impl.count_tree
collect_tree = _impl.collect_tree

BACKENDS = {"python": _pykernels}
if BACKEND == "cython":
    BACKENDS["cython"] = _impl
else:
    try:
        from . import _kernels as _compiled

        BACKENDS["cython"] = _compiled
    except ImportError:
        pass

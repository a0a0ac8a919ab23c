"""Kernel selection: the compiled extension when importable, numpy otherwise.

Set ``MDPDESIGN_PURE_PYTHON=1`` to force the numpy fallback.
"""

import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("MDPDESIGN_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels

pivot = _impl.pivot
ratio_test = _impl.ratio_test
bellman_backup = _impl.bellman_backup

__all__ = ["BACKEND", "pivot", "ratio_test", "bellman_backup"]

"""Kernel selection: the compiled extension when importable, else pure Python.

Set ``AQT_LAB_PURE=1`` to force the Python fallback.
"""
import os

try:
    if os.environ.get("AQT_LAB_PURE"):
        raise ImportError("pure-Python kernels requested")
    from . import _kernels as _impl
    COMPILED = True
except ImportError:
    from . import _kernels_py as _impl
    COMPILED = False

from . import _kernels_py as python_impl

OED = _impl.OED
GREEDY = _impl.GREEDY
max_local_excess = _impl.max_local_excess
run_rounds = _impl.run_rounds

# scaled values beyond this go to the arbitrary-precision fallback
INT64_SAFE = 1 << 60

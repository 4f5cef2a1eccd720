"""Kernel backend selection.

The compiled extension is used when it imports; ``MEANVAL_PURE_PYTHON=1``
forces the numpy fallback.  ``NAME`` records which one is active.
"""
import os

if os.environ.get("MEANVAL_PURE_PYTHON") == "1":
    from . import _kernels_py as _impl
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        from . import _kernels_py as _impl

NAME = "compiled" if _impl.__name__.endswith("._kernels") else "python"

eval_program = _impl.eval_program
running_mean = _impl.running_mean
window_spread = _impl.window_spread

"""Trajectory counting backend, compiled when available.

Set ``RSPSIM_PURE_PYTHON=1`` to force the numpy implementation.
"""
import os

from . import _sampling_py

if os.environ.get("RSPSIM_PURE_PYTHON", "") not in ("", "0"):
    _kernel = None
else:
    try:
        from . import _sampling_kernel as _kernel
    except ImportError:
        _kernel = None

if _kernel is None:
    count_trajectories = _sampling_py.count_trajectories
    BACKEND = "python"
else:
    count_trajectories = _kernel.count_trajectories
    BACKEND = "compiled"

reference_count_trajectories = _sampling_py.count_trajectories

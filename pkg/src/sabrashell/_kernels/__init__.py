"""Kernel backend selection.

The compiled extension (`_core_cy`, built from Cython) and the NumPy/SciPy
fallback (`_core_py`) implement the same function-level API.  The compiled
one is preferred when importable; `backend_name()` reports which is active.
Both are importable side by side for the parity tests and the benchmark.
"""

from . import _core_py

try:  # compiled extension is optional
    from . import _core_cy as _active
except ImportError:  # pragma: no cover - depends on build environment
    _active = _core_py

BACKEND = _active.BACKEND

bilinear = _active.bilinear
mixed_adjoint = _active.mixed_adjoint
step_si_euler = _active.step_si_euler
run_si_euler = _active.run_si_euler
run_si_euler_tangent = _active.run_si_euler_tangent
run_si_euler_adjoint = _active.run_si_euler_adjoint
step_ifrk4 = _active.step_ifrk4
run_ifrk4 = _active.run_ifrk4


def backend_name() -> str:
    """Name of the active kernel backend ('compiled' or 'python')."""
    return BACKEND

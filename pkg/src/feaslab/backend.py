"""Kernel backend selection.

The compiled extension carries the hot loops; the pure-Python module is a
drop-in fallback with bit-identical results.  Set FEASLAB_PURE_PYTHON=1 to
force the fallback (used by the parity tests and the benchmark).
"""

from __future__ import annotations

import os
import warnings

if os.environ.get("FEASLAB_PURE_PYTHON"):
    from . import _core_py as kernels
else:
    try:
        from . import _core as kernels  # type: ignore[attr-defined]
    except ImportError:  # pragma: no cover - build-environment dependent
        warnings.warn(
            "compiled kernels unavailable; falling back to the pure-Python backend",
            RuntimeWarning,
            stacklevel=2,
        )
        from . import _core_py as kernels


def backend_name() -> str:
    return kernels.backend_name()

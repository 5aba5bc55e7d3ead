"""Kernel backend selection.

The hot inner loops (ball sups, per-ball fits, singular-kernel sums) have
two interchangeable implementations:

* ``numba_impl`` — @njit kernels, the default;
* ``numpy_impl`` — pure numpy, selected by setting the environment
  variable ``MORREYLAB_DISABLE_NUMBA=1`` (or automatically when numba is
  not importable).

Both are importable directly for cross-checking and benchmarking; the
package-wide active backend is fixed at import time.
"""

from __future__ import annotations

import os
import warnings

DISABLE_ENV = "MORREYLAB_DISABLE_NUMBA"


def _truthy(val: str) -> bool:
    return val.strip().lower() not in ("", "0", "false", "no")


def _select():
    from . import numpy_impl
    if _truthy(os.environ.get(DISABLE_ENV, "")):
        return numpy_impl, "numpy"
    try:
        from . import numba_impl
        return numba_impl, "numba"
    except ImportError as exc:  # pragma: no cover - depends on environment
        warnings.warn(f"numba unavailable ({exc}); falling back to numpy kernels")
        return numpy_impl, "numpy"


impl, backend_name = _select()


def get_backend():
    """The active kernel module."""
    return impl


def available_backends():
    """Importable kernel modules keyed by name (for parity tests/benchmarks)."""
    out = {}
    from . import numpy_impl
    out["numpy"] = numpy_impl
    try:
        from . import numba_impl
        out["numba"] = numba_impl
    except ImportError:  # pragma: no cover
        pass
    return out

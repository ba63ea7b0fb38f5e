"""Selects the dual simplex kernel: compiled when available, numpy otherwise.

Set ``OWFECS_PURE_PYTHON=1`` to force the numpy kernel.
"""

import os

from . import _simplex_py

try:
    from . import _simplex_ext
except ImportError:  # extension not built
    _simplex_ext = None

KERNELS = {"python": _simplex_py.dual_simplex}
if _simplex_ext is not None:
    KERNELS["cython"] = _simplex_ext.dual_simplex

if os.environ.get("OWFECS_PURE_PYTHON") or _simplex_ext is None:
    BACKEND = "python"
else:
    BACKEND = "cython"


def get_kernel(name: str | None = None):
    name = name or BACKEND
    try:
        return KERNELS[name]
    except KeyError:
        raise ValueError(f"kernel {name!r} unavailable; have {sorted(KERNELS)}") from None

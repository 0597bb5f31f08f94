"""Select the compiled kernel module, falling back to pure Python.

Set ``NLAQKD_PURE_PYTHON=1`` to force the fallback.
"""

import os

kernels = None
if os.environ.get("NLAQKD_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as kernels  # type: ignore[no-redef]
    except ImportError:
        kernels = None

if kernels is None:
    from . import _kernels_py as kernels  # type: ignore[no-redef]

BACKEND = "cython" if kernels.__name__.endswith("._kernels") else "python"

__all__ = ["BACKEND", "kernels"]

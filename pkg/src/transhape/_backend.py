"""Selects the stepping backend at import time.

The compiled kernels in ``transhape._ode_cy`` cover the catalog closed-loop
right-hand sides; integration of arbitrary Python callables always runs the
pure-Python kernels. Set ``TRANSHAPE_BACKEND=python`` to force the fallback
(used by the backend-comparison benchmark) or ``TRANSHAPE_BACKEND=c`` to
fail loudly when the extension is missing.
"""

import os

_requested = os.environ.get("TRANSHAPE_BACKEND", "").strip().lower()
if _requested not in ("", "c", "python"):
    raise ValueError(
        f"TRANSHAPE_BACKEND must be 'c' or 'python', got {_requested!r}"
    )

if _requested == "python":
    compiled = None
    BACKEND = "python"
else:
    try:
        from . import _ode_cy as compiled

        BACKEND = "c"
    except ImportError:
        if _requested == "c":
            raise
        compiled = None
        BACKEND = "python"


def backend_name():
    """Return 'c' when the compiled kernels are active, else 'python'."""
    return BACKEND

"""Sweep kernel backends.

The compiled Cython kernel is preferred when its extension module built; the
pure numpy fallback is selected otherwise.  Set SNLBCD_BACKEND=compiled or
SNLBCD_BACKEND=python to force a choice (forcing "compiled" fails loudly if
the extension is unavailable).
"""

import os

from . import sweep_py

try:
    from . import _sweep_cy
except ImportError:  # extension not built; fallback stays available
    _sweep_cy = None

_forced = os.environ.get("SNLBCD_BACKEND", "").strip().lower()
if _forced == "python":
    BACKEND_NAME = "python"
elif _forced == "compiled":
    if _sweep_cy is None:
        raise ImportError(
            "SNLBCD_BACKEND=compiled but the compiled kernel is not built"
        )
    BACKEND_NAME = "compiled"
elif _forced:
    raise ImportError(
        f"unknown SNLBCD_BACKEND value {_forced!r} (use 'compiled' or 'python')"
    )
else:
    BACKEND_NAME = "compiled" if _sweep_cy is not None else "python"

gauss_seidel_sweep = (
    _sweep_cy.gauss_seidel_sweep if BACKEND_NAME == "compiled"
    else sweep_py.gauss_seidel_sweep
)


def available_backends():
    """Name -> sweep callable for every backend importable in this build."""
    out = {"python": sweep_py.gauss_seidel_sweep}
    if _sweep_cy is not None:
        out["compiled"] = _sweep_cy.gauss_seidel_sweep
    return out

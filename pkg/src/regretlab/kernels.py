"""Kernel backend selection.

The compiled extension ``regretlab._ckernels`` is used when it imports;
otherwise, or when ``REGRETLAB_PURE_PYTHON=1`` is set, the numpy versions in
``regretlab._fallback`` are used. Both expose the same functions.
"""

import os

from . import _fallback

CONVERGED = _fallback.CONVERGED
ITERATION_CAP = _fallback.ITERATION_CAP
DIVERGED = _fallback.DIVERGED


def load_backend(name):
    """Return the kernel module called ``name`` ("compiled" or "python")."""
    if name == "python":
        return _fallback
    if name == "compiled":
        from . import _ckernels

        return _ckernels
    raise ValueError(f"unknown kernel backend {name!r}")


def available_backends():
    names = ["python"]
    try:
        load_backend("compiled")
    except ImportError:
        pass
    else:
        names.insert(0, "compiled")
    return names


if os.environ.get("REGRETLAB_PURE_PYTHON", "") not in ("", "0"):
    backend, BACKEND = _fallback, "python"
else:
    try:
        backend, BACKEND = load_backend("compiled"), "compiled"
    except ImportError:
        backend, BACKEND = _fallback, "python"

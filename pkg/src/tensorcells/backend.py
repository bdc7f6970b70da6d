"""Kernel backend selection.

The compiled extension (``tensorcells._kernels``, built from Cython) and
the pure-numpy module ``tensorcells._kernels_py`` expose identical
functions; the compiled one is preferred when importable. Override with
the environment variable ``TENSORCELLS_BACKEND=python|compiled``.
"""

import os

from . import _kernels_py

_requested = os.environ.get("TENSORCELLS_BACKEND", "auto").strip().lower()

if _requested in ("python", "numpy"):
    kernels = _kernels_py
    BACKEND = "python"
elif _requested in ("compiled", "cython", "c"):
    from . import _kernels as _kernels_c

    kernels = _kernels_c
    BACKEND = "compiled"
elif _requested in ("", "auto"):
    try:
        from . import _kernels as _kernels_c

        kernels = _kernels_c
        BACKEND = "compiled"
    except ImportError:
        kernels = _kernels_py
        BACKEND = "python"
else:
    raise ValueError(
        f"TENSORCELLS_BACKEND={_requested!r} not recognized (use 'python' or 'compiled')"
    )


def get_backend() -> str:
    """Name of the active kernel backend ('python' or 'compiled')."""
    return BACKEND

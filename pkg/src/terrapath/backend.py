"""Kernel backend selection.

Hot loops (terrain feature extraction, A*, D*-Lite, flood fill) ship in two
variants: numba @njit kernels and numpy/python fallbacks. The environment
variable TERRAPATH_NUMBA picks the path: "0"/"false"/"off" forces the
fallback, anything else (default "auto") uses numba when it imports.
Both variants stay importable so tests and benchmarks/compare_backends.py
can exercise them side by side.
"""

import os
import warnings


def _resolve() -> bool:
    flag = os.environ.get("TERRAPATH_NUMBA", "auto").strip().lower()
    if flag in ("0", "false", "off", "no"):
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        if flag in ("1", "true", "on", "yes"):
            warnings.warn(
                "TERRAPATH_NUMBA requested numba but it is not importable; "
                "using the numpy fallback kernels",
                RuntimeWarning,
            )
        return False
    return True


NUMBA_ENABLED = _resolve()


def numba_available() -> bool:
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True

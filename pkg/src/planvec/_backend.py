"""Kernel backend selection.

Hot raster loops exist twice: a numba @njit version and a vectorized
numpy/scipy version. Selection happens once at import time via the
PLANVEC_BACKEND environment variable:

    PLANVEC_BACKEND=numba   force numba (ImportError if unavailable)
    PLANVEC_BACKEND=numpy   force the pure numpy/scipy path
    unset / auto            numba if importable, else numpy
"""

import os

_choice = os.environ.get("PLANVEC_BACKEND", "auto").lower()

if _choice not in ("auto", "numba", "numpy"):
    raise ValueError(f"PLANVEC_BACKEND must be auto|numba|numpy, got {_choice!r}")

if _choice == "numpy":
    from . import _kernels_np as kernels
    ACTIVE_BACKEND = "numpy"
elif _choice == "numba":
    from . import _kernels_nb as kernels
    ACTIVE_BACKEND = "numba"
else:
    try:
        from . import _kernels_nb as kernels
        ACTIVE_BACKEND = "numba"
    except ImportError:
        from . import _kernels_np as kernels
        ACTIVE_BACKEND = "numpy"

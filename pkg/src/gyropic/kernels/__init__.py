"""Particle-loop kernels with a compiled fast path.

The hot loops (semi-implicit pushes over the whole ensemble, charge
deposition, field gather, and the fine reference orbit) exist twice:
a Cython extension (``_accel``) and a pure-NumPy fallback with the same
call signatures.  The extension is preferred when importable; set
``GYROPIC_BACKEND=numpy`` to force the fallback or ``=compiled`` to make
a missing extension a hard error.  ``benchmarks/bench_kernels.py``
compares the two.
"""

import os

from . import numpy_backend

_requested = os.environ.get("GYROPIC_BACKEND", "auto").lower()
if _requested not in ("auto", "compiled", "numpy"):
    raise ValueError(f"GYROPIC_BACKEND must be auto, compiled or numpy, got {_requested!r}")

HAS_COMPILED = False
_impl = numpy_backend
if _requested in ("auto", "compiled"):
    try:
        from . import _accel as _impl  # type: ignore[no-redef]

        HAS_COMPILED = True
    except ImportError:
        if _requested == "compiled":
            raise ImportError(
                "GYROPIC_BACKEND=compiled but the gyropic.kernels._accel "
                "extension is not built; reinstall with a C compiler available"
            ) from None

BACKEND = "compiled" if HAS_COMPILED else "numpy"

push_ensemble = _impl.push_ensemble
deposit_cic = _impl.deposit_cic
gather_bilinear = _impl.gather_bilinear
if HAS_COMPILED:
    reference_orbit = _impl.reference_orbit

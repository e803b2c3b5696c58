"""Kernel backend selection.

The compiled Cython kernels are preferred; the pure-Python reference kernels
are selected when the extension is unavailable or when the environment
variable ``LATENTSKILL_PURE_PYTHON`` is set to a non-empty value other than
``0``. Both backends implement identical arithmetic, so results match bit
for bit; ``benchmarks/bench_kernels.py`` compares their throughput.
"""

import os

from . import pure

if os.environ.get("LATENTSKILL_PURE_PYTHON", "0") not in ("", "0"):
    _impl = pure
    BACKEND = "pure"
else:
    try:
        from . import _native as _impl  # type: ignore[no-redef]

        BACKEND = "native"
    except ImportError:
        _impl = pure
        BACKEND = "pure"

step_agent = _impl.step_agent
raster_capsule = _impl.raster_capsule
raster_disc = _impl.raster_disc

__all__ = ["BACKEND", "step_agent", "raster_capsule", "raster_disc", "pure"]

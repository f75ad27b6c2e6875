"""Kernel backend selection.

The compiled Cython backend is used when its extension module built;
otherwise the numpy fallback takes over. Both implement the same
fixed-order float32 arithmetic and return bit-identical results, so the
choice only affects speed. Set ZVPRED_BACKEND=python or =cython to force
one (the benchmark and the parity tests do).
"""
from __future__ import annotations

import os

_requested = os.environ.get("ZVPRED_BACKEND", "auto").strip().lower()

if _requested in ("auto", ""):
    try:
        from . import _kernels as _impl
    except ImportError:
        from . import _kernels_py as _impl
elif _requested in ("cython", "c", "compiled"):
    from . import _kernels as _impl
elif _requested in ("python", "py"):
    from . import _kernels_py as _impl
else:
    raise RuntimeError(
        f"ZVPRED_BACKEND={_requested!r} not recognized (use auto, cython, python)"
    )

BACKEND = _impl.NAME
conv2d_f32 = _impl.conv2d_f32
maxpool2d_f32 = _impl.maxpool2d_f32
linear_f32 = _impl.linear_f32

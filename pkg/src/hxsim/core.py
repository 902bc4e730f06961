"""Kernel selection: compiled extension when available, pure Python otherwise.

The two kernels are built from the same source (hxsim._kernel, written in
Cython pure-python mode) and are bit-identical in behaviour.  Set
HXSIM_PURE=1 to force the interpreted fallback.
"""

from __future__ import annotations

import os

if os.environ.get("HXSIM_PURE", "") not in ("", "0"):
    from hxsim import _kernel as kernel
else:
    try:
        from hxsim import _kernel_c as kernel  # type: ignore[attr-defined]
    except ImportError:
        from hxsim import _kernel as kernel

Sim = kernel.Sim
KERNEL_COMPILED: bool = bool(kernel.COMPILED)
KERNEL_NAME: str = "compiled" if KERNEL_COMPILED else "pure-python"


def load_kernel(pure: bool = False):
    """Return the requested kernel module (for benchmarks and tests)."""
    if pure:
        from hxsim import _kernel

        return _kernel
    return kernel

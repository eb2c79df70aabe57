"""Select the compiled kernel module when it was built, else the Python one.

Set ``GEVREY_BERGMAN_PURE=1`` to force the fallback (used by the benchmark and
the kernel-equivalence tests).
"""

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if not os.environ.get("GEVREY_BERGMAN_PURE"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # extension not compiled
        _impl = _kernels_py

mul_trunc = _impl.mul_trunc
apply_laplace_pair = _impl.apply_laplace_pair

__all__ = ["BACKEND", "mul_trunc", "apply_laplace_pair"]

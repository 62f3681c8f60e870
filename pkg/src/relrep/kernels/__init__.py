"""Hot kernels: valid 1-D convolution over token positions and max-pooling.

Two interchangeable backends:

* ``_core`` — compiled Cython extension (im2col + BLAS GEMM, C scatter loops)
* ``pure`` — numpy fallback (stride tricks + GEMM)

The compiled core is used when it imported cleanly; set RELREP_KERNELS=pure
or RELREP_KERNELS=cython to force a backend.  Within one backend results are
bit-reproducible; across backends they agree to floating-point tolerance
(summation order differs), which benchmarks/bench_kernels.py checks.
"""

import os

from . import pure

_requested = os.environ.get("RELREP_KERNELS", "").lower()

if _requested == "pure":
    _impl = pure
else:
    try:
        from . import _core as _impl
    except ImportError:
        if _requested == "cython":
            raise ImportError(
                "RELREP_KERNELS=cython but the compiled kernel core is not "
                "available; reinstall with a C compiler present"
            )
        _impl = pure

conv1d_forward = _impl.conv1d_forward
conv1d_backward = _impl.conv1d_backward
maxpool_forward = _impl.maxpool_forward
maxpool_backward = _impl.maxpool_backward


def backend_name() -> str:
    return "pure" if _impl is pure else "cython"

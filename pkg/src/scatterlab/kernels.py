"""Kernel selection.

The compiled module is used when it imports cleanly, unless the environment
variable ``SCATTERLAB_PURE`` is set to a non-empty value other than ``0``.
``BACKEND`` names the module actually in use.
"""

import os

from . import _kernels_py

_force_pure = os.environ.get("SCATTERLAB_PURE", "") not in ("", "0")

_impl = _kernels_py
if not _force_pure:
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _kernels_py

BACKEND = "compiled" if _impl is not _kernels_py else "python"

series_mul = _impl.series_mul
derivation_apply = _impl.derivation_apply
lie_bracket = _impl.lie_bracket
orthant_count = _impl.orthant_count

SHIFT = _kernels_py.SHIFT
W = _kernels_py.W
MASK = _kernels_py.MASK
unpack = _kernels_py.unpack


def pack(m1, m2, j):
    return (m1 * W + m2) * W + j

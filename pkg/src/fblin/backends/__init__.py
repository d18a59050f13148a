"""Kernel backend selection.

The hot kernels (batched network forward pass, input Jacobian, parameter
Jacobian) exist twice: a Cython extension ``fblin.backends._core`` compiled
with ``python setup.py build_ext --inplace``, and the pure-numpy fallback in
``fblin.backends.numpy_backend``.  The compiled core is preferred when
importable; set ``FBLIN_BACKEND=numpy`` or ``FBLIN_BACKEND=compiled`` to
force a choice (forcing an unavailable compiled core raises ImportError).

``mixed_jacobian`` runs once per residual-Jacobian assembly and is served
by the numpy implementation regardless of backend.
"""

import os

from . import numpy_backend
from .numpy_backend import ACTIVATIONS, mixed_jacobian, param_count

_requested = os.environ.get("FBLIN_BACKEND")
if _requested not in (None, "", "compiled", "numpy"):
    raise ImportError(f"FBLIN_BACKEND must be 'compiled' or 'numpy', got {_requested!r}")

_impl = None
if _requested in (None, "", "compiled"):
    try:
        from . import _core as _impl
        backend_name = "compiled"
    except ImportError:
        if _requested == "compiled":
            raise
        _impl = None
if _impl is None:
    _impl = numpy_backend
    backend_name = "numpy"

forward_batch = _impl.forward_batch
input_jacobian_batch = _impl.input_jacobian_batch
param_jacobian_batch = _impl.param_jacobian_batch

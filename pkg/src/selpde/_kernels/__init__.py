"""Batched-MLP kernel backend selection.

The compiled Cython core is preferred when it imported cleanly; the
numpy implementation is the reference and the fallback. Both expose the
same three functions (forward / forward_cache / backprop) with identical
semantics. Set SELPDE_BACKEND=numpy or =compiled to force one.
"""

import os

from . import numpy_impl

_requested = os.environ.get("SELPDE_BACKEND", "").strip().lower()

_compiled = None
if _requested != "numpy":
    try:
        from . import _core as _compiled
    except ImportError:
        _compiled = None
        if _requested == "compiled":
            raise ImportError(
                "SELPDE_BACKEND=compiled but the compiled kernel is not built; "
                "reinstall with a C toolchain or unset SELPDE_BACKEND"
            )

if _compiled is not None:
    BACKEND = "compiled"
    forward = _compiled.forward
    forward_cache = _compiled.forward_cache
    backprop = _compiled.backprop
else:
    BACKEND = "numpy"
    forward = numpy_impl.forward
    forward_cache = numpy_impl.forward_cache
    backprop = numpy_impl.backprop

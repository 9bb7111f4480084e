"""Kernel dispatch: compiled extension when available, pure Python otherwise.

Set ``ASMEVAL_PURE=1`` to force the fallback.
"""

import os

from . import _pykernels

BACKEND = "python"

if not os.environ.get("ASMEVAL_PURE"):
    try:
        from . import _ckernels as _impl
    except ImportError:  # extension not built
        _impl = _pykernels
    else:
        BACKEND = "cython"
else:
    _impl = _pykernels

eval_tape = _impl.eval_tape
levenshtein = _impl.levenshtein

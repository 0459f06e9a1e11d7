"""Search-kernel dispatch: compiled extension with pure-Python fallback.

The compiled kernel (Cython, releases the GIL) is preferred when it was
built for this interpreter. Setting ``HOPSCAN_PURE_PYTHON=1`` in the
environment forces the fallback — useful for debugging and for the
equivalence/benchmark suites. Both implementations share one contract,
documented in `hopscan._kernel_py`.
"""

from __future__ import annotations

import os

from . import _kernel_py

IMPLEMENTATION = "python"
_search = _kernel_py.search

if os.environ.get("HOPSCAN_PURE_PYTHON", "") != "1":
    try:
        from . import _kernel as _compiled

        _search = _compiled.search
        IMPLEMENTATION = "compiled"
    except ImportError:  # extension not built; fallback stays active
        pass


def compiled_available() -> bool:
    return IMPLEMENTATION == "compiled"


def search(*args, **kwargs):
    """Run the active kernel; see `hopscan._kernel_py.search` for the contract."""
    return _search(*args, **kwargs)

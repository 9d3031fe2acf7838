"""Hot-loop kernels, compiled when available.

The Cython extension ``fedoffload._ckernels`` is used if it was built;
otherwise the pure-Python module is used.  Set ``FEDOFFLOAD_PURE_PYTHON=1``
to force the fallback.  Both backends produce bit-identical results.
"""
import os

from . import _pykernels

if os.environ.get("FEDOFFLOAD_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:  # extension not built
        _impl = _pykernels

BACKEND = "cython" if _impl is not _pykernels else "python"

solve_local = _impl.solve_local
solve_power = _impl.solve_power
adam_step = _impl.adam_step


def available_backends():
    """Return ``{name: module}`` for every backend importable in this process."""
    out = {"python": _pykernels}
    try:
        from . import _ckernels
    except ImportError:
        pass
    else:
        out["cython"] = _ckernels
    return out

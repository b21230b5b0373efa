"""Kernel selection: the compiled extension when importable, numpy otherwise.

Set ``SYNERGY_PURE_PYTHON=1`` to force the fallback.
"""
import os

from synergy import _fallback

if os.environ.get("SYNERGY_PURE_PYTHON"):
    _core = None
else:
    try:
        from synergy import _core
    except ImportError:
        _core = None

BACKEND = "compiled" if _core is not None else "python"
_impl = _core if _core is not None else _fallback

best_split = _impl.best_split
cd_sweeps = _impl.cd_sweeps

"""Solver-kernel backend selection.

The compiled Cython kernels are preferred when the extension built; the
numpy/pure-Python fallback is interface-identical. Set GPQUBO_BACKEND=python
(or =c) before import to force a choice; forcing "c" fails loudly instead of
silently degrading.
"""

from __future__ import annotations

import os

from . import _pykernels

_forced = os.environ.get("GPQUBO_BACKEND", "").strip().lower()

if _forced == "python":
    _impl = _pykernels
    _name = "python"
else:
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        _name = "c"
    except ImportError:
        if _forced == "c":
            raise
        _impl = _pykernels
        _name = "python"

gray_scan = _impl.gray_scan
combo_scan = _impl.combo_scan
anneal_run = _impl.anneal_run


def backend_name() -> str:
    """Which kernel implementation is active: "c" or "python"."""
    return _name

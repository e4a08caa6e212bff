"""Backend selection for the pairing kernel.

The compiled extension is preferred; set ``LEVYDENS_PURE=1`` to force
the numpy fallback.  ``BACKEND`` names the active implementation.
"""

import os

from . import _pykernel

if os.environ.get("LEVYDENS_PURE", "") not in ("", "0"):
    _impl = _pykernel
else:
    try:
        from . import _ckernel as _impl
    except ImportError:  # extension not built
        _impl = _pykernel

BACKEND = "compiled" if _impl is not _pykernel else "python"
paired_blocks = _impl.paired_blocks
integrand = _impl.integrand

__all__ = ["BACKEND", "paired_blocks", "integrand"]

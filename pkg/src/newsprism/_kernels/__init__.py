"""Kernel backend selection.

Prefers the compiled extension when it is importable; set NEWSPRISM_PURE=1 to
force the pure-numpy fallback (the benchmark uses this to compare the two).
"""

import os

if os.environ.get("NEWSPRISM_PURE") == "1":
    from . import _ops_py as _impl
else:
    try:
        from . import _ops as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _ops_py as _impl

BACKEND = _impl.BACKEND
pairwise_sq_dists = _impl.pairwise_sq_dists
tsne_grad_kl = _impl.tsne_grad_kl

"""Select the kernel implementation at import time.

The compiled ``_core`` extension is used when it imports; otherwise the
numpy implementation in ``_pycore``.  Set ``BERNFIELD_BACKEND=python`` to
force the fallback (``compiled`` makes a missing extension an error).
"""

import os

from bernfield import _pycore

DIST_RADEMACHER = _pycore.DIST_RADEMACHER
DIST_GAUSSIAN = _pycore.DIST_GAUSSIAN
DIST_UNIFORM = _pycore.DIST_UNIFORM
DIST_TWO_POINT = _pycore.DIST_TWO_POINT

_KERNELS = ("site_keys", "draw_sites", "box_draw", "box_weighted_sums",
            "example1_labels", "splitmix64")


def _load(choice):
    if choice == "python":
        return _pycore, "python"
    try:
        from bernfield import _core
    except ImportError:
        if choice == "compiled":
            raise
        return _pycore, "python"
    return _core, "compiled"


def implementation(name):
    """Return the kernel module for ``name`` in {"python", "compiled"}."""
    return _load(name)[0]


_impl, NAME = _load(os.environ.get("BERNFIELD_BACKEND", "auto").lower())

site_keys = _impl.site_keys
draw_sites = _impl.draw_sites
box_draw = _impl.box_draw
box_weighted_sums = _impl.box_weighted_sums
example1_labels = _impl.example1_labels
splitmix64 = _impl.splitmix64

"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the numpy
fallback. Set ``MANYMINDS_PURE_PYTHON=1`` to force the fallback.
"""

import logging
import os

from . import _kernels_py

logger = logging.getLogger(__name__)

if os.environ.get("MANYMINDS_PURE_PYTHON"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels_cy as _impl
    except ImportError:  # extension not built
        logger.debug("compiled kernels unavailable, using numpy fallback")
        _impl = _kernels_py

BACKEND = "cython" if _impl is not _kernels_py else "python"

counter_hash = _impl.counter_hash
uniform = _impl.uniform
uniform_array = _impl.uniform_array
sample_chain = _impl.sample_chain
relation_matrix = _impl.relation_matrix

REL_SPACELIKE = _kernels_py.REL_SPACELIKE
REL_PAST = _kernels_py.REL_PAST
REL_FUTURE = _kernels_py.REL_FUTURE
REL_MIXED = _kernels_py.REL_MIXED


def backends():
    """Return the available kernel modules keyed by name."""
    out = {"python": _kernels_py}
    try:
        from . import _kernels_cy

        out["cython"] = _kernels_cy
    except ImportError:
        pass
    return out

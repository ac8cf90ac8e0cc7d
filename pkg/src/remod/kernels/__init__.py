"""Hot counting kernels with a compiled backend and a pure-Python fallback.

The compiled extension ``_fast`` is used when it was built; setting the
environment variable ``REMOD_PURE_PYTHON=1`` forces the fallback. Both
backends return identical results.
"""
import os

from . import _pure

BACKEND = "python"

if not os.environ.get("REMOD_PURE_PYTHON"):
    try:
        from . import _fast as _impl
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pure
else:
    _impl = _pure

dependency_matrix = _impl.dependency_matrix
commit_stats = _impl.commit_stats
colocated_pairs = _impl.colocated_pairs
nondominated_ranks = _impl.nondominated_ranks

__all__ = [
    "BACKEND",
    "dependency_matrix",
    "commit_stats",
    "colocated_pairs",
    "nondominated_ranks",
]

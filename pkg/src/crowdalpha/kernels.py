"""Kernel backend selection.

The compiled extension is used when it was built; otherwise the pure-Python
versions are used. Set ``CROWDALPHA_PURE_PYTHON=1`` to force the fallback.
"""

import os

import numpy as np

from . import _kernels_py

_compiled = None
if os.environ.get("CROWDALPHA_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled  # type: ignore[attr-defined]
    except ImportError:
        _compiled = None

BACKENDS = {"python": _kernels_py}
if _compiled is not None:
    BACKENDS["compiled"] = _compiled

BACKEND = "compiled" if _compiled is not None else "python"
_impl = BACKENDS[BACKEND]


def _i64(a):
    return np.ascontiguousarray(a, dtype=np.int64)


def hinge_sgd(indptr, indices, labels, order, lr, lam, dim, backend=None):
    impl = BACKENDS[backend] if backend else _impl
    return impl.hinge_sgd(
        _i64(indptr),
        _i64(indices),
        np.ascontiguousarray(labels, dtype=np.float64),
        _i64(order),
        float(lr),
        float(lam),
        int(dim),
    )


def bfs_distance_sum(indptr, indices, sources, backend=None):
    impl = BACKENDS[backend] if backend else _impl
    return impl.bfs_distance_sum(_i64(indptr), _i64(indices), _i64(sources))


def local_clustering(indptr, indices, backend=None):
    impl = BACKENDS[backend] if backend else _impl
    return impl.local_clustering(_i64(indptr), _i64(indices))

"""Backend selection for the hot kernels.

The compiled extension is used when it imports; set ``VRPOWER_PURE_PYTHON=1``
to force the numpy fallback.
"""

import os

from . import _pykernels as python_backend

try:
    if os.environ.get("VRPOWER_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure-Python backend requested")
    from . import _kernels as compiled_backend
except ImportError:
    compiled_backend = None

backend = compiled_backend if compiled_backend is not None else python_backend
COMPILED = compiled_backend is not None

ERR_NONE = 0
ERR_DEGENERATE = 1
ERR_GRAM = 2


def neighbor_csr(points, delta):
    return backend.neighbor_csr(points, float(delta))


def clique_sums(points, indptr, indices, kmax, spec_k, spec_alpha, cech_r2=-1.0):
    return backend.clique_sums(points, indptr, indices, int(kmax), spec_k, spec_alpha, float(cech_r2))


def clique_faces(points, indptr, indices, kmax, cech_r2=-1.0, with_volumes=False):
    return backend.clique_faces(points, indptr, indices, int(kmax), float(cech_r2), bool(with_volumes))


def miniball_r2_batch(P):
    return backend.miniball_r2_batch(P)

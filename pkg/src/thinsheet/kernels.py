"""Kernel dispatch: compiled extension when importable, numpy otherwise.

Set ``THINSHEET_PURE_PYTHON=1`` to force the numpy path.
"""

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("THINSHEET_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        pass
    else:
        _impl = _compiled
        BACKEND = "cython"


def biot_energy(F, mu, lam):
    """Batched ``mu*|U - I|^2 + lam/2*tr(U - I)^2`` with ``U = sqrt(F^T F)``."""
    return _impl.biot_energy(F, float(mu), float(lam))


def rotated_distance_min(A, M, quats):
    """``(min_k |A - R_k M|_F, argmin)`` over rotations given as quaternions."""
    return _impl.rotated_distance_min(A, M, quats)


quaternion_to_rotation = _kernels_py.quaternion_to_rotation

"""Small symmetric-matrix algebra in orthonormal coordinates.

Symmetric 3x3 matrices are stored as 6-vectors ``(m11, m22, m33, r*m12,
r*m13, r*m23)`` with ``r = sqrt(2)``; symmetric 2x2 matrices as 3-vectors
``(m11, m22, r*m12)``.  With this scaling the Frobenius inner product is
the Euclidean dot product, so quadratic forms are plain symmetric matrices
and self-adjointness can be checked entrywise.

All functions accept arrays with arbitrary leading batch dimensions.
"""

from dataclasses import dataclass

import numpy as np

from .errors import FrameNotOrthogonal

SQRT2 = np.sqrt(2.0)

# (row, col) of each coordinate of the 6-vector
SYM3_INDEX = ((0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2))
SYM2_INDEX = ((0, 0), (1, 1), (0, 1))

# coordinates of the 3x3 vector occupied by the embedded 2x2 block
IN_PLANE = (0, 1, 3)
# coordinates touched by sym(c ⊗ e3): c3 -> 33, c1 -> 13, c2 -> 23
OUT_OF_PLANE = (4, 5, 2)

TRACE3 = np.array([1.0, 1.0, 1.0, 0.0, 0.0, 0.0])
TRACE2 = np.array([1.0, 1.0, 0.0])


def sym(f):
    return 0.5 * (f + np.swapaxes(f, -1, -2))


def skew(f):
    return 0.5 * (f - np.swapaxes(f, -1, -2))


def sym3_to_vec(m):
    """Symmetric part of ``m`` (..., 3, 3) as orthonormal coordinates (..., 6)."""
    m = np.asarray(m, dtype=float)
    return np.stack(
        [
            m[..., 0, 0],
            m[..., 1, 1],
            m[..., 2, 2],
            (m[..., 0, 1] + m[..., 1, 0]) / SQRT2,
            (m[..., 0, 2] + m[..., 2, 0]) / SQRT2,
            (m[..., 1, 2] + m[..., 2, 1]) / SQRT2,
        ],
        axis=-1,
    )


def vec_to_sym3(v):
    v = np.asarray(v, dtype=float)
    m = np.empty(v.shape[:-1] + (3, 3))
    m[..., 0, 0] = v[..., 0]
    m[..., 1, 1] = v[..., 1]
    m[..., 2, 2] = v[..., 2]
    m[..., 0, 1] = m[..., 1, 0] = v[..., 3] / SQRT2
    m[..., 0, 2] = m[..., 2, 0] = v[..., 4] / SQRT2
    m[..., 1, 2] = m[..., 2, 1] = v[..., 5] / SQRT2
    return m


def sym2_to_vec(m):
    m = np.asarray(m, dtype=float)
    return np.stack(
        [m[..., 0, 0], m[..., 1, 1], (m[..., 0, 1] + m[..., 1, 0]) / SQRT2], axis=-1
    )


def vec_to_sym2(v):
    v = np.asarray(v, dtype=float)
    m = np.empty(v.shape[:-1] + (2, 2))
    m[..., 0, 0] = v[..., 0]
    m[..., 1, 1] = v[..., 1]
    m[..., 0, 1] = m[..., 1, 0] = v[..., 2] / SQRT2
    return m


def embed2(x):
    """Coordinates of the 3x3 matrix with ``x`` (2x2 coordinates) as top-left block."""
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape[:-1] + (6,))
    out[..., IN_PLANE] = x
    return out


def restrict2(v):
    """Top-left 2x2 block of a 3x3 coordinate vector."""
    return np.asarray(v)[..., IN_PLANE]


def lift_out_of_plane(c):
    """Coordinates of ``sym(c ⊗ e3)`` (c in the third column, mirrored)."""
    c = np.asarray(c, dtype=float)
    out = np.zeros(c.shape[:-1] + (6,))
    out[..., 4] = c[..., 0] / SQRT2
    out[..., 5] = c[..., 1] / SQRT2
    out[..., 2] = c[..., 2]
    return out


# matrices of the linear maps embed2 and lift_out_of_plane
EMBED2 = embed2(np.eye(3)).T  # (6, 3)
LIFT3 = lift_out_of_plane(np.eye(3)).T  # (6, 3)


def congruence_matrix(a):
    """6x6 matrix of ``X -> a X a`` on symmetric matrices, for symmetric ``a``.

    Accepts a batch (..., 3, 3) and returns (..., 6, 6).
    """
    a = np.asarray(a, dtype=float)
    basis = vec_to_sym3(np.eye(6))  # (6, 3, 3), basis[j] is E_j
    images = np.einsum("...ik,jkl,...lm->...jim", a, basis, a)
    return np.swapaxes(sym3_to_vec(images), -1, -2)


@dataclass(frozen=True)
class QuadForm3:
    """Quadratic form on symmetric 3x3 matrices: ``F -> <L sym F, sym F>``."""

    operator: np.ndarray  # (6, 6) symmetric

    def __call__(self, f):
        return apply_form(self, f)

    def apply(self, f):
        """``L sym(f)`` as a symmetric matrix."""
        return vec_to_sym3(sym3_to_vec(f) @ self.operator.T)

    def min_eigenvalue(self):
        return float(np.linalg.eigvalsh(self.operator)[0])


@dataclass(frozen=True)
class QuadForm2:
    """Quadratic form on symmetric 2x2 matrices."""

    operator: np.ndarray  # (3, 3) symmetric

    def __call__(self, x):
        v = sym2_to_vec(x)
        return np.einsum("...i,ij,...j->...", v, self.operator, v)

    def min_eigenvalue(self):
        return float(np.linalg.eigvalsh(self.operator)[0])


def apply_form(q, f):
    """Evaluate ``<L sym f, sym f>``; antisymmetric parts of ``f`` are ignored."""
    op = q.operator if isinstance(q, QuadForm3) else np.asarray(q)
    v = sym3_to_vec(f)
    return np.einsum("...i,...ij,...j->...", v, op, v)


def frame_of(grad_y, nu, tol=1e-8):
    """Assemble ``[grad_y | nu]`` and check it lies in O(3)."""
    grad_y = np.asarray(grad_y, dtype=float)
    nu = np.asarray(nu, dtype=float)
    q = np.concatenate([grad_y, nu[..., :, None]], axis=-1)
    defect = np.abs(np.swapaxes(q, -1, -2) @ q - np.eye(3)).max()
    if not defect <= tol:
        raise FrameNotOrthogonal(f"frame deviates from O(3) by {defect:.3e} (tol {tol:.1e})")
    return q

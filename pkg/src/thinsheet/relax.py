"""Plane-stress relaxation of Q3 under a prestrain metric.

For a symmetric 2x2 ``X`` the relaxed form is

    Q2(X) = min_c Q3(Abar^-1 [X + sym(c ⊗ e3)] Abar^-1),

and ``c_of(X)`` is the minimizing vector.  Both are linear-algebra
congruences on the 6-dimensional coordinate space, so the batched routine
:func:`relax_operators` works on whole fields at once.
"""

from dataclasses import dataclass

import numpy as np

from .errors import SingularAbar, SingularStationaritySystem
from .symalg import EMBED2, LIFT3, QuadForm2, QuadForm3, congruence_matrix, vec_to_sym3, sym2_to_vec

_COND_MAX = 1e12


def conjugated_operator(L, abar):
    """Operator of ``X -> Q3(Abar^-1 X Abar^-1)``; batched over leading axes."""
    abar = np.asarray(abar, dtype=float)
    sym_err = np.abs(abar - np.swapaxes(abar, -1, -2)).max()
    w = np.linalg.eigvalsh(0.5 * (abar + np.swapaxes(abar, -1, -2)))
    if sym_err > 1e-12 * max(1.0, np.abs(abar).max()) or not np.all(w > 0):
        raise SingularAbar(f"Abar must be SPD (min eigenvalue {w.min():.3e}, asymmetry {sym_err:.1e})")
    P = congruence_matrix(np.linalg.inv(abar))
    return np.swapaxes(P, -1, -2) @ np.asarray(L, dtype=float) @ P


def relax_operators(L, abar=None):
    """Batched relaxation.

    Parameters
    ----------
    L : (..., 6, 6) Q3 operators.
    abar : (..., 3, 3) or None for the identity.

    Returns
    -------
    L2 : (..., 3, 3) relaxed operators.
    C : (..., 3, 3) matrix of ``c_of`` in 2x2 coordinates.
    """
    L = np.asarray(L, dtype=float)
    Lc = L if abar is None else conjugated_operator(L, abar)
    S = LIFT3.T @ Lc @ LIFT3
    cond = np.linalg.cond(S)
    if not np.all(cond < _COND_MAX):
        raise SingularStationaritySystem(f"out-of-plane block has condition number {np.max(cond):.2e}")
    coupling = LIFT3.T @ Lc @ EMBED2
    C = -np.linalg.solve(S, coupling)
    L2 = EMBED2.T @ Lc @ EMBED2 + np.swapaxes(coupling, -1, -2) @ C
    L2 = 0.5 * (L2 + np.swapaxes(L2, -1, -2))
    return L2, C


@dataclass(frozen=True)
class RelaxedForm:
    q2: QuadForm2
    c_matrix: np.ndarray  # (3, 3): c_of(X) = c_matrix @ vec(X)
    abar: np.ndarray

    def c_of(self, X):
        return sym2_to_vec(X) @ self.c_matrix.T


def relax(q3, abar=None):
    """Relax one ``QuadForm3`` (or 6x6 array) under ``abar`` (default Id)."""
    L = q3.operator if isinstance(q3, QuadForm3) else np.asarray(q3, dtype=float)
    abar = np.eye(3) if abar is None else np.asarray(abar, dtype=float)
    L2, C = relax_operators(L, abar)
    return RelaxedForm(QuadForm2(L2), C, abar)


def relaxed_lift(rf, X):
    """``sym(X + c_of(X) ⊗ e3)`` as a symmetric 3x3 matrix."""
    x = sym2_to_vec(X)
    return vec_to_sym3(x @ EMBED2.T + (x @ rf.c_matrix.T) @ LIFT3.T)


def linf_constant(q3):
    """``C/c + 1`` from the extreme eigenvalues of the Q3 operator."""
    w = np.linalg.eigvalsh(q3.operator if isinstance(q3, QuadForm3) else q3)
    return w[-1] / w[0] + 1.0

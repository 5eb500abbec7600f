"""Through-thickness reduction to the effective plate model.

At every midplane point, with ``L2(t)`` the relaxed operator at each thickness
node and ``G(t) = sym((Abar B(t))_2x2)``:

* ``L2* = ∫ L2``, ``phi1 = L2*^-1 ∫ t L2``, ``phi(X) = L2*^-1 ∫ L2 X(t)``;
* ``N1 = G - phi(G)``, ``V2 = t Id - phi1``, ``T2 = V2^T L2 V2``;
* ``T2* = ∫ T2``, ``n* = T2*^-1 ∫ V2^T L2 N1``;
* ``R = ∫ <L2 N1, N1> - <T2* n*, n*>``.

Then ``min_s ∫ Q2(s + tH - G) = <T2*(H - n*), H - n*> + R`` for every 2x2 ``H``.
``phi`` is the L2-orthogonal projection onto fields constant in ``t``; ``R`` is
the squared distance of ``G`` to fields affine in ``t``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import SingularL2Star, SingularT2Star
from .quadrature import ThicknessQuadrature
from .relax import relax_operators
from .symalg import sym2_to_vec

__all__ = [
    "ThicknessQuadrature",
    "MomentOperators",
    "PlateModel",
    "moments",
    "effective_model",
    "plate_from_fields",
    "residue_certificate",
]

_COND_MAX = 1e12


def _solve_checked(a, b, err, what):
    cond = np.linalg.cond(a)
    if not np.all(cond < _COND_MAX):
        raise err(f"{what} is singular (condition number {np.max(cond):.2e})")
    return np.linalg.solve(a, b)


@dataclass(frozen=True)
class MomentOperators:
    l2: np.ndarray  # (..., N, 3, 3)
    weights: np.ndarray  # (N,)
    l2_star: np.ndarray  # (..., 3, 3)
    first_moment: np.ndarray  # (..., 3, 3)
    phi1: np.ndarray  # (..., 3, 3)

    def phi(self, field):
        """Project a per-node field (..., N, 3) onto constants in t."""
        rhs = np.einsum("k,...kij,...kj->...i", self.weights, self.l2, field)
        return np.linalg.solve(self.l2_star, rhs[..., None])[..., 0]


def moments(l2, quad):
    l2 = np.asarray(l2, dtype=float)
    w, t = quad.weights, quad.nodes
    l2_star = np.einsum("k,...kij->...ij", w, l2)
    first = np.einsum("k,...kij->...ij", w * t, l2)
    phi1 = _solve_checked(l2_star, first, SingularL2Star, "L2*")
    return MomentOperators(l2, w, l2_star, first, phi1)


@dataclass(frozen=True)
class PlateModel:
    """Per-point effective plate data (arrays over the P midplane points)."""

    points: np.ndarray  # (P, 2)
    t2_star: np.ndarray  # (P, 3, 3)
    n_star: np.ndarray  # (P, 3)
    residue: np.ndarray  # (P,)
    n1: np.ndarray  # (P, N, 3)
    g: np.ndarray  # (P, N, 3) coordinates of sym((Abar B)_2x2)
    phi_g: np.ndarray  # (P, 3)
    mom: MomentOperators
    c_matrix: np.ndarray  # (P, N, 3, 3) relaxation lifts
    quad: ThicknessQuadrature

    def optimal_stretch(self, H):
        """Minimizing ``s`` for curvature ``H`` (coordinates (P, 3)): phi(G) - phi1 H."""
        return self.phi_g - np.einsum("pij,pj->pi", self.mom.phi1, H)

    def density(self, H):
        """``<T2*(H - n*), H - n*> + R`` per point (no factor 1/2)."""
        e = H - self.n_star
        return np.einsum("pi,pij,pj->p", e, self.t2_star, e) + self.residue

    def table(self):
        """Rows ``x1, x2, T2*_{ij} (i<=j), n*, R``."""
        iu = np.triu_indices(3)
        return np.column_stack([self.points, self.t2_star[:, iu[0], iu[1]], self.n_star, self.residue])


def plate_from_fields(l2, g, quad, points=None, c_matrix=None):
    """Core reduction from per-node relaxed operators ``l2`` (P, N, 3, 3) and
    per-node targets ``g`` (P, N, 3)."""
    l2 = np.asarray(l2, dtype=float)
    g = np.asarray(g, dtype=float)
    P, N = g.shape[:2]
    mom = moments(l2, quad)
    w, t = quad.weights, quad.nodes
    phi_g = mom.phi(g)
    n1 = g - phi_g[:, None, :]
    v2 = t[None, :, None, None] * np.eye(3) - mom.phi1[:, None]
    lv = l2 @ v2
    t2 = np.swapaxes(v2, -1, -2) @ lv
    t2_star = np.einsum("k,pkij->pij", w, t2)
    t2_star = 0.5 * (t2_star + np.swapaxes(t2_star, -1, -2))
    rhs = np.einsum("k,pkji,pkj->pi", w, lv, n1)
    n_star = _solve_checked(t2_star, rhs[..., None], SingularT2Star, "T2*")[..., 0]
    e_n1 = np.einsum("k,pki,pkij,pkj->p", w, n1, l2, n1)
    residue = e_n1 - np.einsum("pi,pij,pj->p", n_star, t2_star, n_star)
    if points is None:
        points = np.zeros((P, 2))
    if c_matrix is None:
        c_matrix = np.zeros((P, N, 3, 3))
    return PlateModel(np.asarray(points, float), t2_star, n_star, residue, n1, g, phi_g, mom, c_matrix, quad)


def target_strain(abar, b):
    """Coordinates of ``sym((Abar B)_2x2)`` for batched Abar (P,3,3), B (P,N,3,3)."""
    ab = np.asarray(abar)[:, None] @ np.asarray(b)
    return sym2_to_vec(ab[..., :2, :2])


def effective_model(prestrain, q3field, quad=None):
    """Reduce a prestrain and per-(point, node) Q3 operators (P, N, 6, 6)."""
    quad = quad or prestrain.quad
    abar = prestrain.abar
    l2, c = relax_operators(q3field, np.broadcast_to(abar[:, None], q3field.shape[:2] + (3, 3)))
    g = target_strain(abar, prestrain.b)
    return plate_from_fields(l2, g, quad, prestrain.points, c)


@dataclass(frozen=True)
class ResidueCertificate:
    residue: np.ndarray  # from the closed form
    residue_gram: np.ndarray  # from the Gram projection
    residue_violation: float
    decomposition_violation: float
    orthogonality_violation: float
    projection_violation: float

    @property
    def max_violation(self):
        return max(
            self.residue_violation,
            self.decomposition_violation,
            self.orthogonality_violation,
            self.projection_violation,
        )


def residue_certificate(model):
    """Check the residue against an explicit projection onto affine-in-t fields.

    The oracle builds the 6x6 Gram matrix of ``{E_k, t E_k}`` in the inner
    product ``∫ <L2 f, g> dt`` and projects ``G`` onto that span, sharing
    nothing with the closed form beyond the samples themselves.
    """
    mom, quad = model.mom, model.quad
    l2, g, w, t = mom.l2, model.g, quad.weights, quad.nodes
    P, N = g.shape[:2]
    basis = np.zeros((N, 6, 3))
    basis[:, :3, :] = np.eye(3)
    basis[:, 3:, :] = t[:, None, None] * np.eye(3)
    lb = np.einsum("pkij,kaj->pkai", l2, basis)
    gram = np.einsum("k,pkai,kbi->pab", w, lb, basis)
    proj_rhs = np.einsum("k,pkai,pki->pa", w, lb, g)
    coef = np.linalg.solve(gram, proj_rhs[..., None])[..., 0]
    gg = np.einsum("k,pki,pkij,pkj->p", w, g, l2, g)
    r_gram = gg - np.einsum("pa,pab,pb->p", coef, gram, coef)
    scale = np.maximum(1.0, np.abs(gg))

    # R = |G|^2 - |phi(G)|^2_{L2*} - |t n* - phi(t n*)|^2
    pg = model.phi_g
    tn = t[None, :, None] * model.n_star[:, None, :]
    tn_perp = tn - mom.phi(tn)[:, None, :]
    norm_tn = np.einsum("k,pki,pkij,pkj->p", w, tn_perp, l2, tn_perp)
    decomposed = gg - np.einsum("pi,pij,pj->p", pg, mom.l2_star, pg) - norm_tn

    # <tX - phi(tX), const> = 0 for the basis X and any constant
    orth = 0.0
    for k in range(3):
        tx = np.broadcast_to(t[:, None] * np.eye(3)[k], (P, N, 3))
        perp = tx - mom.phi(tx)[:, None, :]
        orth = max(orth, float(np.abs(np.einsum("k,pkij,pkj->pi", w, l2, perp)).max()))

    # affine projection minus constant projection equals t n* - phi(t n*)
    affine = np.einsum("pa,kai->pki", coef, basis)
    proj_err = float(np.abs((affine - pg[:, None, :]) - tn_perp).max())

    return ResidueCertificate(
        model.residue,
        r_gram,
        float(np.max(np.abs(model.residue - r_gram) / scale)),
        float(np.max(np.abs(model.residue - decomposed) / scale)),
        orth,
        proj_err,
    )

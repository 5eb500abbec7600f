"""Discrete midsurfaces and the limiting plate energy.

A :class:`Midsurface` holds samples of ``y`` on a rectangular lattice together
with its derived fields (``grad_y``, normal, Cosserat vector, second form).
Derivatives come from second-order finite differences of the samples, or from
the analytic family when ``analytic=True``.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateSurface, InfiniteEnergy, MetricMismatch
from .quadrature import trapezoid_weights
from .relax import conjugated_operator
from .symalg import EMBED2, LIFT3, sym2_to_vec

# analytic families: y(x), jacobian (..., 3, 2), hessian (..., 3, 2, 2)


@dataclass(frozen=True)
class Plane:
    def y(self, x):
        x = np.asarray(x, dtype=float)
        return np.concatenate([x, np.zeros(x.shape[:-1] + (1,))], axis=-1)

    def jac(self, x):
        j = np.zeros(np.shape(x)[:-1] + (3, 2))
        j[..., 0, 0] = j[..., 1, 1] = 1.0
        return j

    def hess(self, x):
        return np.zeros(np.shape(x)[:-1] + (3, 2, 2))


@dataclass(frozen=True)
class Cylinder:
    """Isometric roll about the x2 axis with radius ``rho``; frame = Id at x1 = 0."""

    rho: float

    def y(self, x):
        x = np.asarray(x, dtype=float)
        a = x[..., 0] / self.rho
        return np.stack([self.rho * np.sin(a), x[..., 1], self.rho * (np.cos(a) - 1.0)], axis=-1)

    def jac(self, x):
        a = np.asarray(x, dtype=float)[..., 0] / self.rho
        j = np.zeros(a.shape + (3, 2))
        j[..., 0, 0] = np.cos(a)
        j[..., 2, 0] = -np.sin(a)
        j[..., 1, 1] = 1.0
        return j

    def hess(self, x):
        a = np.asarray(x, dtype=float)[..., 0] / self.rho
        hs = np.zeros(a.shape + (3, 2, 2))
        hs[..., 0, 0, 0] = -np.sin(a) / self.rho
        hs[..., 2, 0, 0] = -np.cos(a) / self.rho
        return hs


@dataclass(frozen=True)
class Sphere:
    """Graph patch of a sphere of radius ``rho`` (not isometric to the plane)."""

    rho: float

    def y(self, x):
        x = np.asarray(x, dtype=float)
        z = np.sqrt(self.rho**2 - np.sum(x**2, axis=-1)) - self.rho
        return np.concatenate([x, z[..., None]], axis=-1)

    def jac(self, x):
        x = np.asarray(x, dtype=float)
        r = np.sqrt(self.rho**2 - np.sum(x**2, axis=-1))
        j = np.zeros(x.shape[:-1] + (3, 2))
        j[..., 0, 0] = j[..., 1, 1] = 1.0
        j[..., 2, :] = -x / r[..., None]
        return j

    def hess(self, x):
        x = np.asarray(x, dtype=float)
        r = np.sqrt(self.rho**2 - np.sum(x**2, axis=-1))
        hs = np.zeros(x.shape[:-1] + (3, 2, 2))
        hs[..., 2, :, :] = -np.eye(2) / r[..., None, None] - x[..., :, None] * x[..., None, :] / r[..., None, None] ** 3
        return hs


@dataclass(frozen=True)
class Affine:
    """``y = F x`` for a constant 3x2 matrix ``F``."""

    F: tuple

    def y(self, x):
        return np.asarray(x, dtype=float) @ np.asarray(self.F, dtype=float).T

    def jac(self, x):
        return np.broadcast_to(np.asarray(self.F, dtype=float), np.shape(x)[:-1] + (3, 2)).copy()

    def hess(self, x):
        return np.zeros(np.shape(x)[:-1] + (3, 2, 2))


def unit_normal(jac, tol=1e-10):
    n = np.cross(jac[..., 0], jac[..., 1])
    norm = np.linalg.norm(n, axis=-1)
    if not np.all(norm > tol):
        raise DegenerateSurface(f"|d1 y x d2 y| falls to {norm.min():.3e}")
    return n / norm[..., None]


def normal_jac(jac, hess):
    """Analytic ``grad nu`` (..., 3, 2) from the first and second derivatives."""
    n = np.cross(jac[..., 0], jac[..., 1])
    norm = np.linalg.norm(n, axis=-1)[..., None]
    nu = n / norm
    out = np.empty(jac.shape)
    for a in range(2):
        dn = np.cross(hess[..., :, 0, a], jac[..., 1]) + np.cross(jac[..., 0], hess[..., :, 1, a])
        out[..., a] = (dn - nu * np.sum(nu * dn, axis=-1, keepdims=True)) / norm
    return out


def cosserat(grad_y, G, nu=None, tol=1e-6):
    """Cosserat vector ``b`` completing ``grad_y`` to a frame with Gram matrix ``G``.

    ``b = grad_y G2^-1 (G13, G23) + sqrt(det G / det G2) nu``.
    """
    grad_y = np.asarray(grad_y, dtype=float)
    G = np.asarray(G, dtype=float)
    if nu is None:
        nu = unit_normal(grad_y)
    g2 = G[..., :2, :2]
    mism = np.abs(np.swapaxes(grad_y, -1, -2) @ grad_y - g2).max()
    if mism > tol:
        raise MetricMismatch(f"grad_y^T grad_y differs from G_2x2 by {mism:.3e}")
    tang = np.linalg.solve(g2, G[..., :2, 2:3])[..., 0]
    scale = np.sqrt(np.linalg.det(G) / np.linalg.det(g2))
    return np.einsum("...ia,...a->...i", grad_y, tang) + scale[..., None] * nu


@dataclass(frozen=True)
class Midsurface:
    shape: tuple  # (n1, n2)
    lengths: tuple
    points: np.ndarray  # (P, 2), C order over (n1, n2)
    y: np.ndarray  # (P, 3)
    grad_y: np.ndarray  # (P, 3, 2)
    nu: np.ndarray  # (P, 3)
    grad_nu: np.ndarray  # (P, 3, 2)
    b: np.ndarray  # (P, 3)
    grad_b: np.ndarray  # (P, 3, 2)
    metric: np.ndarray  # (P, 3, 3) target Gram matrix Abar^2
    weights: np.ndarray  # (P,)
    family: object = field(default=None, compare=False)

    @property
    def second_form(self):
        """Coordinates of ``sym(grad_y^T grad_b)`` (equal to II when Abar = Id)."""
        m = np.swapaxes(self.grad_y, -1, -2) @ self.grad_b
        return sym2_to_vec(0.5 * (m + np.swapaxes(m, -1, -2)))

    @property
    def frame(self):
        return np.concatenate([self.grad_y, self.nu[..., None]], axis=-1)

    def table(self):
        return np.column_stack([self.points, self.y, self.nu, self.b, self.second_form])

    def moved(self, R, c):
        """Rigidly moved copy ``R y + c``."""
        R = np.asarray(R, dtype=float)
        rot = lambda v: np.einsum("ij,pj...->pi...", R, v)
        return Midsurface(
            self.shape, self.lengths, self.points, self.y @ R.T + c, rot(self.grad_y), self.nu @ R.T,
            rot(self.grad_nu), self.b @ R.T, rot(self.grad_b), self.metric, self.weights, None,
        )


def lattice(n1, n2, lengths=(1.0, 1.0), origin=(0.0, 0.0)):
    x1 = origin[0] + np.linspace(0.0, lengths[0], n1)
    x2 = origin[1] + np.linspace(0.0, lengths[1], n2)
    return np.stack(np.meshgrid(x1, x2, indexing="ij"), axis=-1).reshape(-1, 2)


def _grid_gradient(f, shape, lengths):
    """Second-order differences of a (P, k) field on the lattice -> (P, k, 2)."""
    n1, n2 = shape
    arr = f.reshape(n1, n2, -1)
    d1 = np.gradient(arr, lengths[0] / (n1 - 1), axis=0, edge_order=2)
    d2 = np.gradient(arr, lengths[1] / (n2 - 1), axis=1, edge_order=2)
    return np.stack([d1, d2], axis=-1).reshape(n1 * n2, -1, 2)


def build_surface(family, n1, n2, lengths=(1.0, 1.0), origin=(0.0, 0.0), analytic=False, abar_fn=None, tol=1e-6):
    """Sample ``family`` on an ``n1 x n2`` lattice and derive its fields.

    ``abar_fn(x) -> (..., 3, 3)`` supplies the prestrain metric; default Id.
    """
    if n1 < 3 or n2 < 3:
        raise DegenerateSurface("grid must be at least 3x3")
    pts = lattice(n1, n2, lengths, origin)
    y = family.y(pts)
    if analytic:
        grad_y = family.jac(pts)
    else:
        grad_y = _grid_gradient(y, (n1, n2), lengths)
    nu = unit_normal(grad_y)
    if analytic:
        grad_nu = normal_jac(grad_y, family.hess(pts))
    else:
        grad_nu = _grid_gradient(nu, (n1, n2), lengths)
    if abar_fn is None:
        metric = np.broadcast_to(np.eye(3), (len(pts), 3, 3)).copy()
        b, grad_b = nu, grad_nu
    else:
        abar = np.asarray(abar_fn(pts), dtype=float)
        metric = abar @ abar
        b = cosserat(grad_y, metric, nu, tol=np.inf)
        grad_b = _grid_gradient(b, (n1, n2), lengths)
    w = trapezoid_weights(n1, n2, lengths)
    return Midsurface((n1, n2), tuple(lengths), pts, y, grad_y, nu, grad_nu, b, grad_b, metric, w, family)


def isometry_residual(surface, g2=None):
    """Per-node ``|grad_y^T grad_y - G_2x2|_F`` and its maximum."""
    g2 = surface.metric[..., :2, :2] if g2 is None else np.asarray(g2)
    r = np.linalg.norm(np.swapaxes(surface.grad_y, -1, -2) @ surface.grad_y - g2, axis=(-1, -2))
    return r, float(r.max())


def _gate(surface, tol):
    _, worst = isometry_residual(surface)
    if worst > tol:
        raise InfiniteEnergy(worst, tol)


def gamma_energy(surface, model, tol=1e-3):
    """Limit energy ``1/2 ∫ <T2*(H - n*), H - n*> + R`` from the plate model.

    Returns ``(total, density)`` with the density per lattice node.
    """
    _gate(surface, tol)
    dens = 0.5 * model.density(surface.second_form)
    return float(surface.weights @ dens), dens


def direct_density(q3field, abar, g, H, quad):
    """Per-point ``min_{s,d} ∫ Q3(Abar^-1[s + tH - G + sym(d ⊗ e3)]Abar^-1)``.

    Dense normal equations in the unknowns ``z = (s, d_1, ..., d_N)``.
    This path never touches the relaxed form or the moment algebra.

    Parameters
    ----------
    q3field : (P, N, 6, 6)
    abar : (P, 3, 3)
    g : (P, N, 3) target 2x2 coordinates
    H : (P, 3) curvature coordinates
    """
    P, N = g.shape[:2]
    t, w = quad.nodes, quad.weights
    lc = conjugated_operator(q3field, np.broadcast_to(abar[:, None], (P, N, 3, 3)))
    nz = 3 + 3 * N
    # residual at node k: M_k z - r_k with M_k = [EMBED2, 0.., LIFT3, ..0]
    M = np.zeros((N, 6, nz))
    M[:, :, :3] = EMBED2
    for k in range(N):
        M[k, :, 3 + 3 * k : 6 + 3 * k] = LIFT3
    r = (g - t[None, :, None] * H[:, None, :]) @ EMBED2.T  # (P, N, 6)
    lm = np.einsum("pkij,kjz->pkiz", lc, M)
    A = np.einsum("k,kiy,pkiz->pyz", w, M, lm)
    rhs = np.einsum("k,pkiz,pki->pz", w, lm, r)
    z = np.linalg.solve(A, rhs[..., None])[..., 0]
    res = np.einsum("kiz,pz->pki", M, z) - r
    return np.einsum("k,pki,pkij,pkj->p", w, res, lc, res), z


def gamma_energy_direct(surface, prestrain, q3field, quad=None, tol=1e-3):
    """Limit energy by direct minimization over (s, d) at every node."""
    _gate(surface, tol)
    quad = quad or prestrain.quad
    from .effective import target_strain

    g = target_strain(prestrain.abar, prestrain.b)
    dens, _ = direct_density(q3field, prestrain.abar, g, surface.second_form, quad)
    dens = 0.5 * dens
    return float(surface.weights @ dens), dens

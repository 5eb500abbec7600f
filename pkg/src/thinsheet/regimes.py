"""Gradient-restricted minimization gap and the large-prestrain examples.

Norms written ``L^p(Omega^h)`` are over the physical slab of thickness ``h``:
``∫_{Omega^h} f = h ∫_{Omega x (-1/2, 1/2)} f``.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from . import kernels
from .ansatz import fit_rate
from .errors import BadExponents, GeometryOverlap, NotCommuting, SolverStall
from .quadrature import ThicknessQuadrature
from .relax import relax_operators
from .symalg import sym2_to_vec

# gradient-restricted vs free stretch


@dataclass(frozen=True)
class GapResult:
    restricted: float
    unrestricted: float
    gap: float
    iterations: int
    g: np.ndarray  # (n1, n2, 2) nodal displacement


def _q1_gradients():
    """Shape-function gradients on the reference square at 2x2 Gauss points."""
    gp = 0.5 * (1 + np.array([-1, 1]) / np.sqrt(3.0))
    pts = np.array([(a, b) for a in gp for b in gp])  # (4, 2) in [0,1]^2
    # local nodes (0,0), (1,0), (0,1), (1,1)
    corners = np.array([(0, 0), (1, 0), (0, 1), (1, 1)])
    dN = np.empty((4, 4, 2))
    for q, (s, t) in enumerate(pts):
        for k, (i, j) in enumerate(corners):
            fs = s if i else 1 - s
            ft = t if j else 1 - t
            dN[q, k, 0] = (1 if i else -1) * ft
            dN[q, k, 1] = fs * (1 if j else -1)
    return pts, corners, dN


def restricted_gap(b_fn, q3_fn, n1=17, n2=17, lengths=(1.0, 1.0), quad=None, rtol=1e-10, maxiter=20000):
    """Compare ``min_g 1/2 ∫∫ Q2(sym grad g - G)`` with the pointwise free minimum.

    Flat sheet, Abar = Id.  ``g`` is a bilinear (Q1) field on an ``n1 x n2``
    lattice; both energies use the same 2x2-per-cell Gauss points.  Rigid
    in-plane motions are removed by pinning ``g`` at node 0 and ``g2`` at the
    last node on the x1 axis.
    """
    quad = quad or ThicknessQuadrature.gauss(16)
    h1, h2 = lengths[0] / (n1 - 1), lengths[1] / (n2 - 1)
    ref_pts, corners, dN = _q1_gradients()
    cx, cy = np.meshgrid(np.arange(n1 - 1), np.arange(n2 - 1), indexing="ij")
    cx, cy = cx.ravel(), cy.ravel()
    ncell = len(cx)
    # Gauss points (ncell, 4, 2) and weights
    xg = np.stack([(cx[:, None] + ref_pts[None, :, 0]) * h1, (cy[:, None] + ref_pts[None, :, 1]) * h2], -1)
    wg = np.full((ncell, 4), 0.25 * h1 * h2)
    t = quad.nodes
    xs = np.broadcast_to(xg[:, :, None, :], (ncell, 4, len(t), 2))
    ts = np.broadcast_to(t, (ncell, 4, len(t)))
    L2, _ = relax_operators(np.broadcast_to(q3_fn(xs, ts), ts.shape + (6, 6)))
    G = sym2_to_vec(b_fn(xs, ts)[..., :2, :2])
    w = quad.weights
    Ls = np.einsum("k,cqkij->cqij", w, L2)
    bs = np.einsum("k,cqkij,cqkj->cqi", w, L2, G)
    cs = np.einsum("k,cqki,cqkij,cqkj->cq", w, G, L2, G)
    unrestricted = 0.5 * float(np.sum(wg * (cs - np.einsum("cqi,cqi->cq", bs, np.linalg.solve(Ls, bs[..., None])[..., 0]))))

    # strain-displacement map: e = Bmat @ (g1_k, g2_k) over the 4 local nodes
    grad = dN / np.array([h1, h2])  # (4q, 4k, 2)
    Bmat = np.zeros((4, 3, 8))
    r2 = 1 / np.sqrt(2.0)
    for k in range(4):
        Bmat[:, 0, 2 * k] = grad[:, k, 0]
        Bmat[:, 1, 2 * k + 1] = grad[:, k, 1]
        Bmat[:, 2, 2 * k] = r2 * grad[:, k, 1]
        Bmat[:, 2, 2 * k + 1] = r2 * grad[:, k, 0]
    ke = np.einsum("cq,qia,cqij,qjb->cab", wg, Bmat, Ls, Bmat)
    fe = np.einsum("cq,qia,cqi->ca", wg, Bmat, bs)
    nodes = (cx[:, None] + corners[None, :, 0]) * n2 + (cy[:, None] + corners[None, :, 1])  # (ncell, 4)
    dofs = np.stack([2 * nodes, 2 * nodes + 1], -1).reshape(ncell, 8)
    ndof = 2 * n1 * n2
    rows = np.repeat(dofs, 8, axis=1).ravel()
    cols = np.tile(dofs, (1, 8)).ravel()
    K = scipy.sparse.csr_matrix((ke.ravel(), (rows, cols)), shape=(ndof, ndof))
    f = np.zeros(ndof)
    np.add.at(f, dofs.ravel(), fe.ravel())
    pinned = np.array([0, 1, 2 * ((n1 - 1) * n2) + 1])
    free = np.setdiff1d(np.arange(ndof), pinned)
    Kf = K[free][:, free]
    diag = Kf.diagonal()
    M = scipy.sparse.diags(1.0 / diag)
    iters = [0]

    def count(_):
        iters[0] += 1

    sol, info = scipy.sparse.linalg.cg(Kf, f[free], rtol=rtol, atol=0.0, maxiter=maxiter, M=M, callback=count)
    if info != 0:
        raise SolverStall(f"CG did not reach rtol {rtol:.0e} in {maxiter} iterations")
    g = np.zeros(ndof)
    g[free] = sol
    e = np.einsum("qia,ca->cqi", Bmat, g[dofs])
    restricted = 0.5 * float(
        np.sum(wg * (np.einsum("cqi,cqij,cqj->cq", e, Ls, e) - 2 * np.einsum("cqi,cqi->cq", e, bs) + cs))
    )
    return GapResult(restricted, unrestricted, restricted - unrestricted, iters[0], g.reshape(n1, n2, 2))


# helpers shared by the examples


def polar_sym(F):
    """Symmetric positive factor ``sqrt(F^T F)`` and rotation ``U V^T`` (batched SVD)."""
    u, s, vt = np.linalg.svd(F)
    A = np.swapaxes(vt, -1, -2) @ (s[..., :, None] * vt)
    return A, u @ vt


def _dist_energy(F, A):
    FA = np.swapaxes(np.linalg.solve(np.swapaxes(A, -1, -2), np.swapaxes(F, -1, -2)), -1, -2)
    return kernels.biot_energy(FA, 1.0, 0.0)


# Example 1: rolled sheet with zero energy


@dataclass(frozen=True)
class CylinderReport:
    h: float
    alpha: float
    max_energy: float  # max of W over quadrature points
    amplitude_top: float  # prestrain amplitude z/h^alpha at z = h/2
    prestrain_l2_over_h: float  # |A^h - Id|_{L^2(Omega^h)} / h^{3/2}


def example_cylinder(h, alpha, n1=33, n2=5, quad=None):
    """Sheet rolled on a circle of radius ``h^alpha`` with ``A^h = Id + (z/h^alpha) e1⊗e1``."""
    quad = quad or ThicknessQuadrature.gauss(16)
    lam = h ** (-alpha)
    x = np.linspace(0, 1, n1)
    z = h * quad.nodes
    X, Z = np.meshgrid(x, z, indexing="ij")
    s, c = np.sin(lam * X), np.cos(lam * X)
    one = 1 + Z * lam
    F = np.zeros(X.shape + (3, 3))
    F[..., 0, 0], F[..., 1, 0] = -one * s, one * c
    F[..., 2, 1] = 1.0
    F[..., 0, 2], F[..., 1, 2] = c, s
    A = np.broadcast_to(np.eye(3), F.shape).copy()
    A[..., 0, 0] = one
    W = _dist_energy(F, A)
    # |A - Id|^2 = (z lam)^2 -> ∫_{Omega^h} = h * ∫ (h t lam)^2 dt
    l2 = h * (h * lam) ** 2 * float(quad.weights @ quad.nodes**2)
    return CylinderReport(h, alpha, float(np.abs(W).max()), 0.5 * h ** (1 - alpha), float(np.sqrt(l2 / h**3)))


# Example 2: crease


@dataclass(frozen=True)
class CornerReport:
    h: float
    radius: float
    max_energy: float
    sup_metric_defect: float  # max |A^T A - Id| on the arc
    l1_metric_defect: float  # |A^T A - Id|_{L^1(Omega^1)}
    midplane_defect: float  # metric defect on z = 0
    grad_nu_arc: float  # |grad nu| on the arc (analytic)
    grad_nu_discrete: float  # finite-difference estimate across the arc


def _corner_midplane(x, r):
    x0m = 0.5 * (1 - np.pi * r / 2)
    x0p = 0.5 * (1 + np.pi * r / 2)
    th = np.clip((x - x0m) / r, 0, np.pi / 2)
    tang = np.stack([np.cos(th), np.zeros_like(th), np.sin(th)], -1)
    nu = np.stack([-np.sin(th), np.zeros_like(th), np.cos(th)], -1)
    on_arc = (x > x0m) & (x < x0p)
    dnu = np.where(on_arc[..., None], -tang / r, 0.0)
    return tang, nu, dnu, on_arc


def example_corner(h, lam=1.0, n1=401, quad=None):
    """Flat / quarter-cylinder of radius ``r = lam h`` / flat, with ``A^h`` from the polar factor."""
    r = lam * h
    if not 0 < r < 0.25:
        raise GeometryOverlap(f"arc radius {r} must lie in (0, 1/4)")
    quad = quad or ThicknessQuadrature.gauss(16)
    x0m = 0.5 * (1 - np.pi * r / 2)
    x0p = 0.5 * (1 + np.pi * r / 2)
    # resolve the arc with its own sub-grid
    x = np.unique(np.concatenate([np.linspace(0, 1, n1), np.linspace(x0m, x0p, 65)]))
    tang, nu, dnu, on_arc = _corner_midplane(x, r)
    z = h * quad.nodes
    F = np.zeros((len(x), len(z), 3, 3))
    F[..., 0] = tang[:, None] + z[None, :, None] * dnu[:, None]
    F[..., 1, 1] = 1.0
    F[..., 2] = nu[:, None]
    A, _ = polar_sym(F)
    W = _dist_energy(F, A)
    defect = np.linalg.norm(np.swapaxes(A, -1, -2) @ A - np.eye(3), axis=(-1, -2))
    wx = np.gradient(x)  # trapezoid-like weights on the nonuniform grid
    wx[[0, -1]] *= 0.5
    l1 = float(wx @ (defect @ quad.weights))
    frame0 = np.stack([tang, np.broadcast_to(np.eye(3)[1], tang.shape), nu], -1)  # grad u at z = 0
    mid = np.linalg.norm(np.swapaxes(frame0, -1, -2) @ frame0 - np.eye(3), axis=(-1, -2))
    step = r / 8
    xc = 0.5 * (x0m + x0p)
    _, n_plus, _, _ = _corner_midplane(np.array(xc + step), r)
    _, n_minus, _, _ = _corner_midplane(np.array(xc - step), r)
    gnu = float(np.linalg.norm(n_plus - n_minus) / (2 * step))
    return CornerReport(
        h,
        r,
        float(np.abs(W).max()),
        float(defect[on_arc].max()) if on_arc.any() else 0.0,
        l1,
        float(np.abs(mid).max()),
        1.0 / r,
        gnu,
    )


# Example 3: oscillating graph


@dataclass(frozen=True)
class MetricSequenceReport:
    h: np.ndarray
    prestrain_l2: np.ndarray  # |A^h - Abar|^2_{L^2(Omega^h)}
    metric_l1: np.ndarray  # |(A^h)^T A^h - Abar^T Abar|_{L^1(Omega^h)}
    energy: np.ndarray  # max of W over quadrature points
    exponents: dict
    status: str = "ok"
    extra: dict = field(default_factory=dict)


def _oscillation_gradient(x, z, h, alpha, beta):
    k = h ** (-beta)
    a = h ** (alpha - beta)
    c, s = np.cos(k * x), np.sin(k * x)
    root = np.sqrt(a**2 * c**2 + 1)
    F = np.zeros(np.broadcast_shapes(x.shape, z.shape) + (3, 3))
    F[..., 0, 0] = 1 + z * h ** (alpha - 2 * beta) * s / root**3
    F[..., 1, 1] = 1.0
    F[..., 0, 2] = -a * c / root  # third column is the unit normal itself
    F[..., 2, 0] = a * c + z * h ** (2 * alpha - 3 * beta) * s * c / root**3
    F[..., 2, 2] = 1 / root
    return F


def example_oscillation(h_list, alpha, beta, n_period=64, quad=None):
    """``u^h = (x, y, h^alpha sin(h^-beta x)) + z nu`` with ``A^h`` the polar factor.

    The integrand is periodic in ``x``; averaging over one period equals the
    mean over a domain holding a whole number of periods.
    """
    if not (alpha > 0 and beta > 0 and alpha - beta > 0):
        raise BadExponents(f"need alpha > 0, beta > 0, alpha - beta > 0 (got {alpha}, {beta})")
    quad = quad or ThicknessQuadrature.gauss(16)
    h_arr = np.asarray(h_list, dtype=float)
    l2, l1, en = [], [], []
    for h in h_arr:
        period = 2 * np.pi * h**beta
        x = (np.arange(n_period) + 0.5) * period / n_period
        z = h * quad.nodes
        F = _oscillation_gradient(x[:, None], z[None, :], h, alpha, beta)
        A, _ = polar_sym(F)
        en.append(float(np.abs(_dist_energy(F, A)).max()))
        dev = np.sum((A - np.eye(3)) ** 2, axis=(-1, -2))
        met = np.linalg.norm(np.swapaxes(A, -1, -2) @ A - np.eye(3), axis=(-1, -2))
        l2.append(h * float(np.mean(dev @ quad.weights)))
        l1.append(h * float(np.mean(met @ quad.weights)))
    l2, l1 = np.array(l2), np.array(l1)
    scaled = l2 / h_arr**3
    exps = {
        "prestrain_l2_over_h3": fit_rate(h_arr, scaled),
        "metric_l1": fit_rate(h_arr, l1),
        "expected": 2 * (alpha - 2 * beta),
    }
    if not -1 < alpha - 2 * beta < 0 or not 2 * alpha - 3 * beta > -1:
        status = "no_divergence" if alpha - 2 * beta >= 0 else "outside_regime"
    else:
        status = "divergent" if exps["prestrain_l2_over_h3"] < 0 else "no_divergence"
    return MetricSequenceReport(h_arr, l2, l1, np.array(en), exps, status, {"scaled": scaled})


# nearest rotation for commuting SPD pairs


@dataclass(frozen=True)
class RotationGapResult:
    sampled_min: float
    identity_value: float
    violation: float  # max(0, identity_value - sampled_min)


def commute_defect(A, M):
    return float(np.abs(A @ M - M @ A).max() / max(1.0, np.abs(A).max() * np.abs(M).max()))


def nearest_rotation_gap(A, M, n_samples, rng, tol=1e-12):
    """Sampled ``min_Q |A - Q M|`` over uniform rotations (and Q = Id) vs ``|A - M|``."""
    A = np.asarray(A, dtype=float)
    M = np.asarray(M, dtype=float)
    if commute_defect(A, M) > tol:
        raise NotCommuting(f"AM - MA = {commute_defect(A, M):.2e}")
    quats = rng.normal(size=(n_samples, 4))
    best, _ = kernels.rotated_distance_min(A, M, quats)
    ident = float(np.linalg.norm(A - M))
    best = min(best, ident)
    return RotationGapResult(best, ident, max(0.0, ident - best))


def beating_rotation(A, M):
    """Rotation factor of ``AM``; beats Q = Id whenever A and M do not commute."""
    Q, _ = scipy.linalg.polar(np.asarray(A) @ np.asarray(M))
    return Q, float(np.linalg.norm(A - Q @ M)), float(np.linalg.norm(A - M))


def random_spd(rng, eig_range=(0.5, 2.0), rotation=None):
    R = kernels.quaternion_to_rotation(rng.normal(size=4)) if rotation is None else rotation
    return R @ np.diag(rng.uniform(*eig_range, 3)) @ R.T


# order-h diagnostics


def order_h_diagnostic(grad_fn, a_fn, abar, h_list, points, weights, quad=None, law=None):
    """Sizes of ``A^h - Abar`` and ``(A^h)^T A^h - Abar^T Abar`` along an h sequence.

    Parameters
    ----------
    grad_fn : ``(x, t, h) -> grad u^h`` at physical ``z = h t``, shape (P, N, 3, 3).
    a_fn : ``(x, t, h) -> A^h`` with the same shape.
    abar : (3, 3) limit prestrain.
    points, weights : midplane quadrature normalized to the domain area; pass
        ``points=callable`` (``h -> (points, weights)``) when the cell depends on h.
    """
    quad = quad or ThicknessQuadrature.gauss(16)
    abar = np.asarray(abar, dtype=float)
    h_arr = np.asarray(h_list, dtype=float)
    target = abar.T @ abar
    l2, l1, inplane, en, avg = [], [], [], [], []
    t = quad.nodes[None, :]
    for h in h_arr:
        pts, weights = points(h) if callable(points) else (points, weights)
        x = np.asarray(pts)[:, None, :]
        F = grad_fn(x, t, h)
        A = a_fn(x, t, h)
        ata = np.swapaxes(A, -1, -2) @ A
        dev = np.sum((A - abar) ** 2, axis=(-1, -2))
        met = np.linalg.norm(ata - target, axis=(-1, -2))
        l2.append(h * float(weights @ (dev @ quad.weights)))
        l1.append(h * float(weights @ (met @ quad.weights)))
        # in-plane block of the thickness-averaged metric
        mean_ata = np.einsum("k,pkij->pij", quad.weights, ata)
        inplane.append(float(np.abs(mean_ata[:, :2, :2] - target[:2, :2]).max()))
        # averaged gradient closeness: |mean_z grad u - Abar|_{L^2(Omega^h)}
        mean_f = np.einsum("k,pkij->pij", quad.weights, F)
        avg.append(float(np.sqrt(h * weights @ np.sum((mean_f - abar) ** 2, axis=(-1, -2)))))
        if law is not None:
            FA = np.swapaxes(np.linalg.solve(np.swapaxes(A, -1, -2), np.swapaxes(F, -1, -2)), -1, -2)
            en.append(float(np.abs(law(FA)).max()))
    l2, l1 = np.array(l2), np.array(l1)
    exps = {
        "prestrain_l2": fit_rate(h_arr, l2),
        "metric_l1": fit_rate(h_arr, l1),
        "averaged_gradient_l2": fit_rate(h_arr, np.array(avg)),
    }
    status = "h2_bound_consistent" if exps["metric_l1"] >= 2 - 0.05 or np.all(l1 < 1e-14) else "h2_bound_violated"
    return MetricSequenceReport(
        h_arr, l2, l1, np.array(en), exps, status, {"inplane_block": np.array(inplane), "averaged_gradient": np.array(avg)}
    )


def remark_family(alpha=2.0, beta=3.0):
    """``u^h = (x, y, z) + z h^alpha sin(h^-beta x) sin(h^-beta y) e3`` and its polar prestrain."""

    def grad_fn(x, t, h):
        k = h ** (-beta)
        z = h * t
        x1, x2 = x[..., 0], x[..., 1]
        F = np.broadcast_to(np.eye(3), np.broadcast_shapes(x1.shape, z.shape) + (3, 3)).copy()
        amp = h**alpha
        F[..., 2, 0] = z * amp * k * np.cos(k * x1) * np.sin(k * x2)
        F[..., 2, 1] = z * amp * k * np.sin(k * x1) * np.cos(k * x2)
        F[..., 2, 2] = 1 + amp * np.sin(k * x1) * np.sin(k * x2)
        return F

    def a_fn(x, t, h):
        return polar_sym(grad_fn(x, t, h))[0]

    return grad_fn, a_fn


def period_cell(h, beta, n=32):
    """Midpoint lattice on one period cell of ``sin(h^-beta x1) sin(h^-beta x2)``, weights summing to 1."""
    period = 2 * np.pi * h**beta
    u = (np.arange(n) + 0.5) / n * period
    pts = np.stack(np.meshgrid(u, u, indexing="ij"), -1).reshape(-1, 2)
    return pts, np.full(len(pts), 1.0 / len(pts))

"""Elastic energy densities, their Hessian at the identity, and hypothesis checks.

A law is a batched callable ``W(F, x, t)``: ``F`` has shape (..., 3, 3) and the
optional midplane point ``x`` / thickness coordinate ``t`` broadcast against
the batch.  Builtin laws also carry their exact Hessian so that downstream
oracles do not inherit finite-difference error.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import kernels
from .errors import BadModuli, HessianNotPSD, SingularDeformation, StepTooSmall
from .symalg import TRACE3, QuadForm3, sym3_to_vec, vec_to_sym3


@dataclass(frozen=True)
class ElasticLaw:
    name: str
    params: dict
    density: Callable  # (F, x, t) -> energies, batched
    q3_exact: Optional[Callable] = field(default=None, compare=False)  # (x, t) -> (..., 6, 6)

    def energy(self, F, x=None, t=None, strict=False):
        F = np.asarray(F, dtype=float)
        if strict:
            det = np.linalg.det(F)
            if np.any(det <= 0):
                raise SingularDeformation(f"det F <= 0 at {int(np.sum(det <= 0))} points")
        return self.density(F, x, t)

    def __call__(self, F, x=None, t=None):
        return self.density(np.asarray(F, dtype=float), x, t)


def isotropic_operator(mu, lam):
    """Operator of ``2 mu |sym F|^2 + lam (tr F)^2``; broadcasts over mu, lam."""
    mu = np.asarray(mu, dtype=float)[..., None, None]
    lam = np.asarray(lam, dtype=float)[..., None, None]
    return 2.0 * mu * np.eye(6) + lam * np.outer(TRACE3, TRACE3)


def builtin_dist_law():
    """``W(F) = |sqrt(F^T F) - Id|^2``, i.e. dist^2(F, SO(3)) when det F > 0."""

    def density(F, x=None, t=None):
        return kernels.biot_energy(F, 1.0, 0.0)

    return ElasticLaw("dist", {}, density, lambda x=None, t=None: isotropic_operator(1.0, 0.0))


def _check_moduli(mu, lam):
    if not mu > 0:
        raise BadModuli(f"mu must be positive, got {mu}")
    if not 3 * lam + 2 * mu > 0:
        raise BadModuli(f"3*lambda + 2*mu must be positive, got {3 * lam + 2 * mu}")


def builtin_isotropic_quadratic(mu, lam):
    """``W = mu |U - Id|^2 + lam/2 tr(U - Id)^2`` with ``U = sqrt(F^T F)``.

    Its Hessian at the identity is ``2 mu |sym F|^2 + lam (tr F)^2``.
    """
    mu, lam = float(mu), float(lam)
    _check_moduli(mu, lam)

    def density(F, x=None, t=None):
        return kernels.biot_energy(F, mu, lam)

    return ElasticLaw(
        "isotropic", {"mu": mu, "lambda": lam}, density, lambda x=None, t=None: isotropic_operator(mu, lam)
    )


def isotropic_linear_t(mu, lam, slope):
    """Isotropic law with moduli scaled by ``1 + slope*t`` through the thickness."""
    mu, lam, slope = float(mu), float(lam), float(slope)
    _check_moduli(mu, lam)
    if abs(slope) >= 2.0:
        raise BadModuli("|slope| must be < 2 so moduli stay positive on t in (-1/2, 1/2)")

    def scale(t):
        return 1.0 if t is None else 1.0 + slope * np.asarray(t, dtype=float)

    def density(F, x=None, t=None):
        return scale(t) * kernels.biot_energy(F, mu, lam)

    def q3(x=None, t=None):
        return np.asarray(scale(t))[..., None, None] * isotropic_operator(mu, lam)

    return ElasticLaw("isotropic_linear_t", {"mu": mu, "lambda": lam, "slope": slope}, density, q3)


def biot_quadratic(operator):
    """``W = 1/2 <M e, e>`` with ``e`` the coordinates of ``sqrt(F^T F) - Id``.

    ``M`` is any symmetric 6x6 matrix; an indefinite ``M`` gives a law that
    violates the growth hypotheses, which is useful for exercising checks.
    """
    op = np.asarray(operator, dtype=float)
    if op.shape != (6, 6):
        raise BadModuli(f"operator must be 6x6, got {op.shape}")
    op = 0.5 * (op + op.T)

    def density(F, x=None, t=None):
        F = np.asarray(F, dtype=float)
        w, v = np.linalg.eigh(np.swapaxes(F, -1, -2) @ F)
        u = (v * (np.sqrt(np.clip(w, 0, None)) - 1.0)[..., None, :]) @ np.swapaxes(v, -1, -2)
        e = sym3_to_vec(u)
        return 0.5 * np.einsum("...i,ij,...j->...", e, op, e)

    return ElasticLaw("biot_quadratic", {"operator": op.tolist()}, density, None)


def dist_to_so3_sq(F):
    """Squared Frobenius distance to SO(3) from the singular values of ``F``."""
    F = np.asarray(F, dtype=float)
    s = np.linalg.svd(F, compute_uv=False)  # descending
    d2 = np.sum((s - 1.0) ** 2, axis=-1)
    flip = np.linalg.det(F) < 0
    return np.where(flip, d2 - (s[..., -1] - 1.0) ** 2 + (s[..., -1] + 1.0) ** 2, d2)


def _fd_hessian(law, x, t, step):
    basis = vec_to_sym3(np.eye(6))
    eye = np.eye(3)
    # all (i, j) directions at once: E_i + E_j and E_i - E_j
    plus = basis[:, None] + basis[None, :]
    minus = basis[:, None] - basis[None, :]
    f = lambda m: law(eye + m, x, t)
    return (f(step * plus) - f(step * minus) - f(-step * minus) + f(-step * plus)) / (4 * step**2)


def hessian_at_identity(law, x=None, t=None, step=1e-4, tol=1e-8, exact=False):
    """Quadratic form ``Q3 = D^2 W(Id)`` as a 6x6 operator.

    Central second differences on the orthonormal symmetric basis, with one
    Richardson step (``step`` and ``step/2``) to cancel the O(step^2) term.
    ``exact=True`` returns the closed form carried by builtin laws instead.
    """
    if exact and law.q3_exact is not None:
        return QuadForm3(np.asarray(law.q3_exact(x, t), dtype=float))
    if step**2 <= 100 * np.finfo(float).eps:
        raise StepTooSmall(f"step {step:.1e} leaves no significant digits in second differences")
    h1 = _fd_hessian(law, x, t, step)
    h2 = _fd_hessian(law, x, t, step / 2)
    h = (4 * h2 - h1) / 3
    h = 0.5 * (h + h.T)
    low = np.linalg.eigvalsh(h)[0]
    if low < -tol * max(1.0, np.abs(h).max()):
        raise HessianNotPSD(f"smallest eigenvalue {low:.3e} of D^2 W(Id) is negative")
    return QuadForm3(h)


def q3_field(law, points, t_nodes, exact=True, step=1e-4):
    """Operators at every (point, node); returns an array (P, N, 6, 6)."""
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    t_nodes = np.asarray(t_nodes, dtype=float)
    P, N = len(points), len(t_nodes)
    if exact and law.q3_exact is not None:
        op = law.q3_exact(points[:, None, :], np.broadcast_to(t_nodes, (P, N)))
        return np.broadcast_to(np.asarray(op, dtype=float), (P, N, 6, 6)).copy()
    out = np.empty((P, N, 6, 6))
    for p in range(P):
        for k in range(N):
            out[p, k] = hessian_at_identity(law, points[p], t_nodes[k], step=step).operator
    return out


@dataclass(frozen=True)
class TaylorReport:
    h: np.ndarray
    ratios: np.ndarray
    deviation: float  # |ratio - 1| at the smallest h
    applicable: bool = True


def taylor_ratio_check(law, F, h_list, x=None, t=None, q3=None):
    """Ratios ``W(Id + hF) / (h^2 Q3(F) / 2)``; these tend to 1 as h -> 0."""
    F = np.asarray(F, dtype=float)
    if q3 is None:
        q3 = hessian_at_identity(law, x, t, exact=True)
    denom = 0.5 * q3(F)
    h = np.asarray(h_list, dtype=float)
    if not denom > 1e-14:
        return TaylorReport(h, np.full(len(h), np.nan), np.nan, applicable=False)
    vals = law(np.eye(3) + h[:, None, None] * F, x, t)
    ratios = vals / (h**2 * denom)
    return TaylorReport(h, ratios, float(abs(ratios[-1] - 1.0)))


# hypothesis checks, shared by the test-suite and the ``verify`` command


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    violation: float
    detail: str = ""


def random_rotations(rng, n):
    q = rng.normal(size=(n, 4))
    return kernels.quaternion_to_rotation(q)


def check_frame_indifference(law, rng, n=100, tol=1e-10):
    F = np.eye(3) + 0.5 * rng.normal(size=(n, 3, 3))
    R = random_rotations(rng, n)
    w = law(F)
    viol = np.max(np.abs(law(R @ F) - w) / (1.0 + w))
    return CheckResult("frame_indifference", bool(viol <= tol), float(viol))


def check_so3_minimum(law, rng, n=100, tol=1e-10):
    viol = float(np.max(np.abs(law(random_rotations(rng, n)))))
    return CheckResult("so3_minimum", viol <= tol, viol)


def sample_near_so3(rng, n, radius=0.5):
    """Random matrices within Frobenius distance ``radius`` of SO(3)."""
    pert = rng.normal(size=(n, 3, 3))
    pert *= (radius * rng.uniform(0, 1, n) ** (1 / 9) / np.linalg.norm(pert, axis=(1, 2)))[:, None, None]
    return random_rotations(rng, n) @ (np.eye(3) + pert)


def sandwich_constants(law):
    """Growth constants (c, C) with c dist^2 <= W <= C dist^2 for builtin laws."""
    if law.name == "dist":
        return 1.0, 1.0
    if law.name in ("isotropic", "isotropic_linear_t"):
        mu, lam = law.params["mu"], law.params["lambda"]
        lo, hi = min(mu, mu + 1.5 * lam), max(mu, mu + 1.5 * lam)
        if law.name == "isotropic_linear_t":
            s = abs(law.params["slope"]) / 2
            lo, hi = lo * (1 - s), hi * (1 + s)
        return lo, hi
    return None


def check_sandwich(law, rng, n=200, tol=1e-10):
    consts = sandwich_constants(law)
    if consts is None:
        return CheckResult("sandwich", False, np.inf, "no constants known for this law")
    c, C = consts
    F = sample_near_so3(rng, n)
    d2 = dist_to_so3_sq(F)
    w = law(F)
    viol = float(max(np.max(c * d2 - w), np.max(w - C * d2), 0.0))
    if law.name == "dist":
        viol = float(np.max(np.abs(w - d2)))
    return CheckResult("sandwich", viol <= tol, viol)


def check_hessian(law, tol=1e-6):
    """Symmetric, PSD, blind to skew directions, and close to the closed form."""
    try:
        q = hessian_at_identity(law)
    except HessianNotPSD as exc:
        return CheckResult("hessian_symmetric_psd", False, np.inf, str(exc))
    op = q.operator
    skew = np.zeros((3, 3))
    skew[0, 1], skew[1, 0] = 1.0, -1.0
    s = 1e-5
    eye = np.eye(3)
    skew_curv = (law(eye + s * skew) + law(eye - s * skew) - 2 * law(eye)) / s**2
    viol = max(float(np.abs(op - op.T).max()), float(abs(skew_curv)))
    if law.q3_exact is not None:
        viol = max(viol, float(np.abs(op - law.q3_exact()).max()))
    return CheckResult("hessian_symmetric_psd", viol <= tol, viol)


def check_taylor(law, rng, tol=1e-2):
    a = rng.normal(size=(3, 3))
    rep = taylor_ratio_check(law, a, [1e-2, 1e-3, 1e-4])
    return CheckResult("taylor_ratio", bool(rep.deviation <= tol), float(rep.deviation))


def check_law(law, rng):
    return [
        check_frame_indifference(law, rng),
        check_so3_minimum(law, rng),
        check_sandwich(law, rng),
        check_taylor(law, rng),
        check_hessian(law),
    ]

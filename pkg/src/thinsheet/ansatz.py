"""Recovery sequences and the rescaled 3D energy.

Deformations are evaluated on the unit-thickness slab, with ``x3`` in
(-1/2, 1/2) and ``grad_h y = (grad' y, d3 y / h)``.  Every builder returns a
:class:`Deformation3D` carrying an evaluator and its analytic rescaled
gradient; :func:`gradient_check` compares the two.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import BadTarget, PreconditionII, SingularPrestrain
from .midsurface import normal_jac, unit_normal
from .relax import relax_operators
from .symalg import sym2_to_vec

_INNER = np.polynomial.legendre.leggauss(8)


@dataclass(frozen=True)
class Deformation3D:
    evaluate: Callable  # (x (..., 2), x3 (...), h) -> (..., 3)
    gradient: Callable  # (x, x3, h) -> (..., 3, 3) rescaled gradient
    descriptor: dict = field(default_factory=dict)


def integrate_from_zero(fn, x3):
    """``∫_0^{x3} fn(tau) dtau`` by 8-point Gauss on [0, x3]; ``fn`` is batched."""
    x3 = np.asarray(x3, dtype=float)
    nodes, weights = _INNER
    tau = 0.5 * x3[..., None] * (nodes + 1.0)  # (..., 8)
    vals = fn(tau)  # (..., 8, k)
    return 0.5 * x3[..., None] * np.einsum("...qk,q->...k", vals, weights)


def gradient_check(deformation, rng, h, n=20, step=1e-5, lengths=(1.0, 1.0)):
    """Max relative gap between analytic and central-difference gradients."""
    x = rng.uniform(0.1, 0.9, size=(n, 2)) * np.asarray(lengths)
    x3 = rng.uniform(-0.4, 0.4, size=n)
    ana = deformation.gradient(x, x3, h)
    num = np.empty_like(ana)
    for a in range(2):
        e = np.zeros(2)
        e[a] = step
        num[..., a] = (deformation.evaluate(x + e, x3, h) - deformation.evaluate(x - e, x3, h)) / (2 * step)
    num[..., 2] = (deformation.evaluate(x, x3 + step, h) - deformation.evaluate(x, x3 - step, h)) / (2 * step * h)
    return float(np.abs(ana - num).max() / max(1.0, np.abs(ana).max()))


# curved (Kirchhoff) ansatz


def kirchhoff_curved_ansatz(family, g, grad_g, d_fn, h=None, fd_step=1e-5):
    """``y^h = y + h[x3 nu + Q g] + h^2 Q D`` with ``D = ∫_0^{x3} d``.

    Parameters
    ----------
    family : analytic surface (``y``, ``jac``, ``hess``), isometric to the plane.
    g, grad_g : callables ``x -> (..., 3)`` and ``x -> (..., 3, 2)``.
    d_fn : callable ``(x, t) -> (..., 3)``; ``x`` (..., 2) and ``t`` (...) broadcast.
    """

    def frame(x):
        jac = family.jac(x)
        nu = unit_normal(jac)
        return jac, nu, np.concatenate([jac, nu[..., None]], axis=-1)

    def D(x, x3):
        x = np.asarray(x, dtype=float)
        return integrate_from_zero(lambda tau: d_fn(x[..., None, :], tau), x3)

    def evaluate(x, x3, h):
        x = np.asarray(x, dtype=float)
        x3 = np.asarray(x3, dtype=float)
        _, nu, Q = frame(x)
        inner = x3[..., None] * nu + np.einsum("...ij,...j->...i", Q, g(x))
        return family.y(x) + h * inner + h**2 * np.einsum("...ij,...j->...i", Q, D(x, x3))

    def gradient(x, x3, h):
        x = np.asarray(x, dtype=float)
        x3 = np.asarray(x3, dtype=float)
        jac, nu, Q = frame(x)
        hess = family.hess(x)
        dnu = normal_jac(jac, hess)
        gx = g(x)
        Dx = D(x, x3)
        out = np.empty(np.broadcast_shapes(x.shape[:-1], x3.shape) + (3, 3))
        for a in range(2):
            dQ = np.concatenate([hess[..., :, :, a], dnu[..., :, a : a + 1]], axis=-1)
            e = np.zeros(2)
            e[a] = fd_step
            dD = (D(x + e, x3) - D(x - e, x3)) / (2 * fd_step)
            dQg = np.einsum("...ij,...j->...i", dQ, gx) + np.einsum("...ij,...j->...i", Q, grad_g(x)[..., a])
            dQD = np.einsum("...ij,...j->...i", dQ, Dx) + np.einsum("...ij,...j->...i", Q, dD)
            out[..., a] = jac[..., a] + h * (x3[..., None] * dnu[..., a] + dQg) + h**2 * dQD
        out[..., 2] = nu + h * np.einsum("...ij,...j->...i", Q, d_fn(x, x3))
        return out

    return Deformation3D(evaluate, gradient, {"family": "curved", "surface": repr(family)})


def curved_recovery(family, b_fn, q3_fn, s):
    """Curved ansatz realizing the constant stretch ``s`` (2x2) with ``g' = s x``.

    ``d`` is chosen so that the strain at order h equals the relaxed lift of
    ``x3 II + s - B_2x2``; requires Abar = Id.
    """
    s = np.asarray(s, dtype=float)

    def second_form(x):
        jac = family.jac(x)
        m = np.swapaxes(jac, -1, -2) @ normal_jac(jac, family.hess(x))
        return 0.5 * (m + np.swapaxes(m, -1, -2))

    def g(x):
        x = np.asarray(x, dtype=float)
        return np.concatenate([x @ s.T, np.zeros(x.shape[:-1] + (1,))], axis=-1)

    def grad_g(x):
        out = np.zeros(np.shape(x)[:-1] + (3, 2))
        out[..., :2, :] = s
        return out

    def d_fn(x, t):
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        shape = np.broadcast_shapes(x.shape[:-1], t.shape)
        x = np.broadcast_to(x, shape + (2,))
        t = np.broadcast_to(t, shape)
        II = second_form(x)
        B = b_fn(x, t)
        X = sym2_to_vec(t[..., None, None] * II + s - B[..., :2, :2])
        _, C = relax_operators(q3_fn(x, t))
        c = np.einsum("...ij,...j->...i", C, X)
        # third row of Q^T grad(Q g): grad g3 - g'^T II, with g3 = 0
        row3 = -np.einsum("...a,...ab->...b", g(x)[..., :2], II)
        d = np.empty(shape + (3,))
        d[..., :2] = c[..., :2] - row3 + 2.0 * B[..., :2, 2]
        d[..., 2] = c[..., 2] + B[..., 2, 2]
        return d

    return kirchhoff_curved_ansatz(family, g, grad_g, d_fn)


# flat wrinkled ansatz


@dataclass(frozen=True)
class CorrugationFields:
    """Single-mode ``v, w`` with ``1/2 grad v ⊗ grad v + sym grad w = A`` exactly."""

    A: np.ndarray  # (2, 2)
    lam: float

    @property
    def amplitude(self):
        return np.sqrt(2.0 * self.A[0, 0]) / self.lam

    def v(self, x):
        return self.amplitude * np.sin(self.lam * np.asarray(x)[..., 0])

    def grad_v(self, x):
        x1 = np.asarray(x)[..., 0]
        out = np.zeros(np.shape(x))
        out[..., 0] = self.amplitude * self.lam * np.cos(self.lam * x1)
        return out

    def hess_v(self, x):
        x1 = np.asarray(x)[..., 0]
        out = np.zeros(np.shape(x)[:-1] + (2, 2))
        out[..., 0, 0] = -self.amplitude * self.lam**2 * np.sin(self.lam * x1)
        return out

    def w(self, x):
        x = np.asarray(x, dtype=float)
        A, lam = self.A, self.lam
        w1 = A[0, 0] * (x[..., 0] / 2 - np.sin(2 * lam * x[..., 0]) / (4 * lam))
        w2 = 2 * A[0, 1] * x[..., 0] + A[1, 1] * x[..., 1]
        return np.stack([w1, w2], axis=-1)

    def grad_w(self, x):
        x1 = np.asarray(x, dtype=float)[..., 0]
        A, lam = self.A, self.lam
        out = np.zeros(np.shape(x)[:-1] + (2, 2))
        out[..., 0, 0] = A[0, 0] * (0.5 - 0.5 * np.cos(2 * lam * x1))
        out[..., 1, 0] = 2 * A[0, 1]
        out[..., 1, 1] = A[1, 1]
        return out

    def residual(self, x):
        """Pointwise ``|1/2 grad v ⊗ grad v + sym grad w - A|_F``."""
        gv = self.grad_v(x)
        gw = self.grad_w(x)
        m = 0.5 * gv[..., :, None] * gv[..., None, :] + 0.5 * (gw + np.swapaxes(gw, -1, -2)) - self.A
        return np.linalg.norm(m, axis=(-1, -2))


def corrugation_fields(A, lam):
    A = np.asarray(A, dtype=float)
    A = 0.5 * (A + A.T)
    if A[0, 0] < 0:
        raise BadTarget(f"A11 must be nonnegative for a single-mode corrugation, got {A[0, 0]}")
    if not lam > 0:
        raise BadTarget("wavenumber must be positive")
    return CorrugationFields(A, float(lam))


def wavenumber(h, gamma):
    return h ** (-gamma)


def whole_period_length(lam, target=1.0):
    """Length closest to ``target`` spanning a whole number of periods of ``sin(lam x)``."""
    period = 2 * np.pi / lam
    return max(1, round(target / period)) * period


def wrinkled_flat_ansatz(s, K, b_fn, q3_fn, h, gamma=0.4, family=None):
    """Seven-term flat ansatz with a single-mode corrugation.

    ``y^h = (1-hK) x + h x3 (1-Kh) e3 + h w + h^2 D + h^{1/2} v e3
    - h^{3/2} x3 (grad v, 0) - 1/2 h^2 x3 |grad v|^2 e3``.

    The corrugation realizes ``A = s + K Id``, so the order-h in-plane strain
    equals ``s``; ``d`` lifts ``s - B_2x2`` optimally.
    """
    if family is not None:
        probe = np.random.default_rng(0).uniform(0, 1, (8, 2))
        if np.abs(family.hess(probe)).max() > 0:
            raise PreconditionII("wrinkled ansatz needs a flat base surface")
    s = np.asarray(s, dtype=float)
    lam = wavenumber(h, gamma)
    cf = corrugation_fields(s + K * np.eye(2), lam)
    sv = sym2_to_vec(s)

    def d_fn(t):
        t = np.asarray(t, dtype=float)
        x0 = np.zeros(t.shape + (2,))
        B = b_fn(x0, t)
        X = sv - sym2_to_vec(B[..., :2, :2])
        _, C = relax_operators(q3_fn(x0, t))
        c = np.einsum("...ij,...j->...i", C, X)
        d = np.empty(t.shape + (3,))
        d[..., :2] = c[..., :2] + 2.0 * B[..., :2, 2]
        d[..., 2] = c[..., 2] + B[..., 2, 2] + K
        return d

    def evaluate(x, x3, hh):
        x = np.asarray(x, dtype=float)
        x3 = np.asarray(x3, dtype=float)
        shape = np.broadcast_shapes(x.shape[:-1], x3.shape)
        out = np.zeros(shape + (3,))
        gv = cf.grad_v(x)
        out[..., :2] = (1 - hh * K) * x + hh * cf.w(x) - hh**1.5 * x3[..., None] * gv
        out[..., 2] = hh * x3 * (1 - K * hh) + hh**0.5 * cf.v(x) - 0.5 * hh**2 * x3 * np.sum(gv**2, -1)
        return out + hh**2 * integrate_from_zero(d_fn, np.broadcast_to(x3, shape))

    def gradient(x, x3, hh):
        x = np.asarray(x, dtype=float)
        x3 = np.asarray(x3, dtype=float)
        shape = np.broadcast_shapes(x.shape[:-1], x3.shape)
        gv = cf.grad_v(x)
        hv = cf.hess_v(x)
        gw = cf.grad_w(x)
        out = np.zeros(shape + (3, 3))
        z = x3[..., None, None]
        out[..., :2, :2] = (1 - hh * K) * np.eye(2) + hh * gw - hh**1.5 * z * hv
        # grad |grad v|^2 = 2 hess(v) grad v
        out[..., 2, :2] = hh**0.5 * gv - hh**2 * x3[..., None] * np.einsum("...ab,...b->...a", hv, gv)
        out[..., :, 2] = hh * d_fn(np.broadcast_to(x3, shape))
        out[..., 2, 2] += 1 - K * hh - 0.5 * hh * np.sum(gv**2, -1)
        out[..., :2, 2] -= hh**0.5 * gv
        return out

    desc = {"family": "wrinkled", "K": float(K), "gamma": float(gamma), "lambda": float(lam)}
    return Deformation3D(evaluate, gradient, desc), cf


# 3D energy


def energy3d(deformation, prestrain_fn, law, h, points, weights, quad, threads=1, chunk=512):
    """Rescaled energy ``E^h / h^2 = ∫∫ W(grad_h y (A^h)^-1) / h^2``.

    Parameters
    ----------
    prestrain_fn : callable ``(x, t, h) -> A^h`` (..., 3, 3).
    points, weights : midplane quadrature (P, 2), (P,).
    quad : thickness quadrature.

    Returns ``(total, density)`` with the per-point thickness integral.
    The work is split into fixed chunks, so the result does not depend on
    ``threads``.
    """
    points = np.asarray(points, dtype=float)
    t = quad.nodes

    def work(sl):
        x = points[sl][:, None, :]
        F = deformation.gradient(x, t[None, :], h)
        A = prestrain_fn(x, np.broadcast_to(t, (len(x), len(t))), h)
        det = np.linalg.det(A)
        if not np.all(np.abs(det) > 1e-14):
            raise SingularPrestrain(f"A^h is singular at {int(np.sum(np.abs(det) <= 1e-14))} points")
        FA = np.swapaxes(np.linalg.solve(np.swapaxes(A, -1, -2), np.swapaxes(F, -1, -2)), -1, -2)
        W = law(FA, x, t[None, :])
        return W @ quad.weights / h**2

    slices = [slice(i, i + chunk) for i in range(0, len(points), chunk)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, slices))
    else:
        parts = [work(sl) for sl in slices]
    dens = np.concatenate(parts)
    return float(np.asarray(weights) @ dens), dens


def metric_defect(deformation, x, x3, h):
    """``sym((grad_h y)^T grad_h y - Id) / (2h)``."""
    F = deformation.gradient(x, x3, h)
    return (np.swapaxes(F, -1, -2) @ F - np.eye(3)) / (2 * h)


@dataclass(frozen=True)
class SweepResult:
    h: np.ndarray
    energy: np.ndarray
    error: np.ndarray  # absolute
    target: float
    rate: float  # fitted exponent of the error, nan if not applicable
    monotone_tail: bool

    @property
    def rel_error(self):
        return self.error / max(abs(self.target), 1e-300)

    def rows(self):
        return np.column_stack([self.h, self.energy, self.error, self.rel_error])


def fit_rate(h, err):
    h = np.asarray(h, dtype=float)
    err = np.asarray(err, dtype=float)
    ok = err > 1e-14
    if ok.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(h[ok]), np.log(err[ok]), 1)[0])


def h_sweep(energy_at, h_list, target, tail=3):
    """Evaluate ``energy_at(h)`` over decreasing ``h_list``; fit the error rate.

    The rate is ``nan`` when every error sits below 1e-14 (nothing to fit).
    """
    h = np.asarray(h_list, dtype=float)
    if len(h) < 3 or np.any(np.diff(h) >= 0):
        raise ValueError("h_list must be strictly decreasing with at least 3 entries")
    E = np.array([energy_at(float(x)) for x in h])
    err = np.abs(E - target)
    tail_err = err[-tail:]
    mono = bool(np.all(np.diff(tail_err) <= 1e-14))
    return SweepResult(h, E, err, float(target), fit_rate(h, err), mono)


def fixed_stretch_energy(s, b_fn, q3_fn, quad, x=None):
    """``1/2 ∫ Q2(s - B_2x2(t)) dt`` at Abar = Id, for a flat sheet at rest curvature 0."""
    x = np.zeros(2) if x is None else np.asarray(x, dtype=float)
    t = quad.nodes
    xs = np.broadcast_to(x, t.shape + (2,))
    L2, _ = relax_operators(np.broadcast_to(q3_fn(xs, t), t.shape + (6, 6)))
    X = sym2_to_vec(np.asarray(s, dtype=float)) - sym2_to_vec(b_fn(xs, t)[..., :2, :2])
    return 0.5 * float(quad.weights @ np.einsum("ki,kij,kj->k", X, L2, X))


__all__ = [
    "Deformation3D",
    "CorrugationFields",
    "SweepResult",
    "corrugation_fields",
    "curved_recovery",
    "energy3d",
    "fit_rate",
    "fixed_stretch_energy",
    "gradient_check",
    "h_sweep",
    "kirchhoff_curved_ansatz",
    "metric_defect",
    "whole_period_length",
    "wrinkled_flat_ansatz",
]

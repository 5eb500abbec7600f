"""Prestrain fields ``A^h = Abar(x') + h B(x', t)`` sampled on grid x nodes."""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, SingularAbar
from .quadrature import ThicknessQuadrature


@dataclass(frozen=True)
class PrestrainField:
    """Samples of ``Abar`` at midplane points and of ``B`` at (point, node).

    ``b_fn(x, t)`` is kept so that consumers needing ``B`` off the quadrature
    nodes (the 3D energy, the ansatz builders) can evaluate it directly.
    """

    points: np.ndarray  # (P, 2)
    abar: np.ndarray  # (P, 3, 3)
    b: np.ndarray  # (P, N, 3, 3)
    quad: ThicknessQuadrature
    b_fn: object = field(default=None, compare=False)
    abar_fn: object = field(default=None, compare=False)
    descriptor: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        w = np.linalg.eigvalsh(self.abar)
        if not np.all(w > 0):
            raise SingularAbar(f"Abar not SPD (min eigenvalue {w.min():.3e})")

    def prestrain(self, x, t, h):
        """``Abar(x) + h B(x, t)`` for arrays ``x`` (..., 2) and ``t`` (...)."""
        return self.abar_fn(x) + h * self.b_fn(x, t)


def constant_b(b0):
    b0 = _sym(b0)
    return lambda x, t: np.broadcast_to(b0, np.broadcast_shapes(np.shape(x)[:-1], np.shape(t)) + (3, 3))


def polynomial_b(coeffs):
    """``B(t) = sum_k t^k C_k`` with constant coefficient matrices."""
    cs = [_sym(c) for c in coeffs]

    def fn(x, t):
        shape = np.broadcast_shapes(np.shape(x)[:-1], np.shape(t))
        t = np.broadcast_to(np.asarray(t, dtype=float), shape)
        out = np.zeros(shape + (3, 3))
        for k, c in enumerate(cs):
            out = out + (t**k)[..., None, None] * c
        return out

    return fn


def linear_b(b1, b0=None):
    return polynomial_b([np.zeros((3, 3)) if b0 is None else b0, b1])


def layers_b(layers):
    """Piecewise-constant laminate: ``layers`` is a list of (t_lo, t_hi, B)."""
    layers = [(float(a), float(b), _sym(m)) for a, b, m in layers]
    for a, b, _ in layers:
        if not -0.5 <= a < b <= 0.5:
            raise ConfigError("prestrain.b.layers", f"bad layer bounds ({a}, {b})")

    def fn(x, t):
        shape = np.broadcast_shapes(np.shape(x)[:-1], np.shape(t))
        t = np.broadcast_to(np.asarray(t, dtype=float), shape)
        out = np.zeros(shape + (3, 3))
        for a, b, m in layers:
            # half-open layers; the upper face belongs to the last layer
            mask = (t >= a) & ((t < b) | (b == 0.5))
            out[mask] = m
        return out

    return fn, sorted({a for a, _, _ in layers} | {b for _, b, _ in layers})


def constant_abar(a=None):
    a = np.eye(3) if a is None else _sym(a)
    return lambda x: np.broadcast_to(a, np.shape(x)[:-1] + (3, 3))


def make_prestrain(points, quad, b_fn, abar_fn=None, descriptor=None):
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    abar_fn = abar_fn or constant_abar()
    abar = np.array(abar_fn(points), dtype=float)
    b = np.array(b_fn(points[:, None, :], quad.nodes[None, :]), dtype=float)
    return PrestrainField(points, abar, b, quad, b_fn, abar_fn, descriptor or {})


def _sym(m):
    m = np.asarray(m, dtype=float)
    if m.shape == (2, 2):
        m = np.pad(m, ((0, 1), (0, 1)))
    if m.shape != (3, 3):
        raise ConfigError("prestrain", f"expected a 3x3 (or 2x2) matrix, got shape {m.shape}")
    return 0.5 * (m + m.T)

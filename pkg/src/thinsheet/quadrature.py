"""Gauss-Legendre rules on the thickness interval (-1/2, 1/2)."""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ThicknessQuadrature:
    """Nodes in (-1/2, 1/2) with positive weights summing to one."""

    nodes: np.ndarray
    weights: np.ndarray

    @classmethod
    def gauss(cls, n=16, lo=-0.5, hi=0.5):
        x, w = np.polynomial.legendre.leggauss(int(n))
        half = 0.5 * (hi - lo)
        return cls(lo + half * (x + 1.0), half * w)

    @classmethod
    def composite(cls, n, breaks):
        """``n`` Gauss nodes on each sub-interval between sorted ``breaks``.

        Integrands that are smooth on each layer but jump across an
        interface are then integrated with full Gauss accuracy.
        """
        edges = np.unique(np.concatenate([[-0.5, 0.5], np.clip(np.asarray(breaks, float), -0.5, 0.5)]))
        parts = [cls.gauss(n, a, b) for a, b in zip(edges[:-1], edges[1:])]
        return cls(np.concatenate([p.nodes for p in parts]), np.concatenate([p.weights for p in parts]))

    def __len__(self):
        return len(self.nodes)

    def integrate(self, values, axis=-1):
        """Weighted sum of samples along ``axis``."""
        return np.tensordot(np.moveaxis(np.asarray(values), axis, -1), self.weights, axes=([-1], [0]))


def trapezoid_weights(n1, n2, lengths=(1.0, 1.0)):
    """Tensor trapezoid weights on an ``n1 x n2`` lattice (C order)."""
    w1 = np.full(n1, lengths[0] / (n1 - 1))
    w1[[0, -1]] *= 0.5
    w2 = np.full(n2, lengths[1] / (n2 - 1))
    w2[[0, -1]] *= 0.5
    return np.outer(w1, w2).ravel()

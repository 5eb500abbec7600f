"""Pure-numpy twins of the compiled kernels in ``_kernels.pyx``."""

import numpy as np


def biot_energy(F, mu, lam):
    F = np.asarray(F, dtype=float)
    e = np.swapaxes(F, -1, -2) @ F - np.eye(3)
    ev = np.linalg.eigvalsh(e)
    root = np.clip(1.0 + ev, 0.0, None)
    with np.errstate(divide="ignore", invalid="ignore"):
        x = np.where(root > 0.0, ev / (np.sqrt(root) + 1.0), -1.0)
    return mu * np.sum(x * x, axis=-1) + 0.5 * lam * np.sum(x, axis=-1) ** 2


def quaternion_to_rotation(q):
    q = np.asarray(q, dtype=float)
    q = q / np.linalg.norm(q, axis=-1, keepdims=True)
    w, x, y, z = np.moveaxis(q, -1, 0)
    return np.stack(
        [
            np.stack([1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)], -1),
            np.stack([2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)], -1),
            np.stack([2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)], -1),
        ],
        axis=-2,
    )


def rotated_distance_min(A, M, quats, chunk=65536):
    A = np.asarray(A, dtype=float)
    M = np.asarray(M, dtype=float)
    best, best_k = np.inf, -1
    for start in range(0, len(quats), chunk):
        r = quaternion_to_rotation(quats[start : start + chunk])
        d2 = np.sum((A - r @ M) ** 2, axis=(-1, -2))
        k = int(np.argmin(d2))
        if d2[k] < best:
            best, best_k = float(d2[k]), start + k
    return float(np.sqrt(best)), best_k

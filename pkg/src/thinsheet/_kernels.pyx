# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops.  Must stay numerically interchangeable with _kernels_py."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, INFINITY

cnp.import_array()


cdef void _sym3_eigvals(double a[3][3], double out[3]) noexcept nogil:
    # cyclic Jacobi; a is destroyed
    cdef int sweep, p, q, r
    cdef double off, theta, t, c, s, tau, apq, app, aqq, arp, arq
    for sweep in range(60):
        off = fabs(a[0][1]) + fabs(a[0][2]) + fabs(a[1][2])
        if off == 0.0 or off <= 1e-20 * (fabs(a[0][0]) + fabs(a[1][1]) + fabs(a[2][2])):
            break
        for p in range(2):
            for q in range(p + 1, 3):
                apq = a[p][q]
                if apq == 0.0:
                    continue
                app = a[p][p]
                aqq = a[q][q]
                theta = (aqq - app) / (2.0 * apq)
                if theta >= 0:
                    t = 1.0 / (theta + sqrt(1.0 + theta * theta))
                else:
                    t = -1.0 / (-theta + sqrt(1.0 + theta * theta))
                c = 1.0 / sqrt(1.0 + t * t)
                s = t * c
                tau = s / (1.0 + c)
                a[p][p] = app - t * apq
                a[q][q] = aqq + t * apq
                a[p][q] = 0.0
                a[q][p] = 0.0
                for r in range(3):
                    if r != p and r != q:
                        arp = a[r][p]
                        arq = a[r][q]
                        a[r][p] = arp - s * (arq + tau * arp)
                        a[p][r] = a[r][p]
                        a[r][q] = arq + s * (arp - tau * arq)
                        a[q][r] = a[r][q]
    out[0] = a[0][0]
    out[1] = a[1][1]
    out[2] = a[2][2]


def biot_energy(F, double mu, double lam):
    """mu*sum((s_i-1)^2) + lam/2*(sum(s_i-1))^2 over singular values s_i of each F."""
    F = np.asarray(F, dtype=np.float64)
    batch = F.shape[:F.ndim - 2]
    cdef double[:, :, ::1] f = np.ascontiguousarray(F.reshape(-1, 3, 3))
    cdef Py_ssize_t n = f.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double e[3][3]
    cdef double ev[3]
    cdef double acc, sq, tr, x, root
    cdef Py_ssize_t k
    cdef int i, j, m
    with nogil:
        for k in range(n):
            for i in range(3):
                for j in range(3):
                    acc = 0.0
                    for m in range(3):
                        acc = acc + f[k, m, i] * f[k, m, j]
                    e[i][j] = acc
                e[i][i] = e[i][i] - 1.0
            _sym3_eigvals(e, ev)
            sq = 0.0
            tr = 0.0
            for i in range(3):
                root = 1.0 + ev[i]
                if root < 0.0:
                    root = 0.0
                x = ev[i] / (sqrt(root) + 1.0) if root > 0.0 else -1.0
                sq = sq + x * x
                tr = tr + x
            out[k] = mu * sq + 0.5 * lam * tr * tr
    return out_arr.reshape(batch)


def rotated_distance_min(A, M, quats):
    """min_k ||A - R(q_k) M||_F over unit quaternions; returns (value, index)."""
    cdef double[:, ::1] a = np.ascontiguousarray(A, dtype=np.float64)
    cdef double[:, ::1] mm = np.ascontiguousarray(M, dtype=np.float64)
    cdef double[:, ::1] q = np.ascontiguousarray(quats, dtype=np.float64)
    cdef Py_ssize_t n = q.shape[0], k, best = -1
    cdef double w, x, y, z, nrm, d2, bestd = INFINITY, acc
    cdef double r[3][3]
    cdef int i, j, l
    with nogil:
        for k in range(n):
            w = q[k, 0]
            x = q[k, 1]
            y = q[k, 2]
            z = q[k, 3]
            nrm = sqrt(w * w + x * x + y * y + z * z)
            w = w / nrm
            x = x / nrm
            y = y / nrm
            z = z / nrm
            r[0][0] = 1 - 2 * (y * y + z * z)
            r[0][1] = 2 * (x * y - z * w)
            r[0][2] = 2 * (x * z + y * w)
            r[1][0] = 2 * (x * y + z * w)
            r[1][1] = 1 - 2 * (x * x + z * z)
            r[1][2] = 2 * (y * z - x * w)
            r[2][0] = 2 * (x * z - y * w)
            r[2][1] = 2 * (y * z + x * w)
            r[2][2] = 1 - 2 * (x * x + y * y)
            d2 = 0.0
            for i in range(3):
                for j in range(3):
                    acc = a[i, j]
                    for l in range(3):
                        acc = acc - r[i][l] * mm[l, j]
                    d2 = d2 + acc * acc
            if d2 < bestd:
                bestd = d2
                best = k
    return sqrt(bestd), best

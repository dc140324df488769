# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled geometry kernels. Must stay numerically identical to ``_pykernels``."""

import numpy as np

from libc.math cimport hypot


def project_points(const double[:, ::1] points, const double[:, ::1] ring,
                   const double[:, ::1] seg, const double[::1] seglen,
                   const double[::1] cum, const double[::1] heading):
    cdef Py_ssize_t m = points.shape[0]
    cdef Py_ssize_t n = ring.shape[0]
    cdef Py_ssize_t i, k, best
    cdef double px, py, ax, ay, dx, dy, t, qx, qy, ex, ey, d2, best_d2
    cdef double best_t, bqx, bqy, dist, cross

    nearest_arr = np.empty((m, 2), dtype=np.float64)
    lateral_arr = np.empty(m, dtype=np.float64)
    tangent_arr = np.empty(m, dtype=np.float64)
    arc_arr = np.empty(m, dtype=np.float64)
    cdef double[:, ::1] nearest = nearest_arr
    cdef double[::1] lateral = lateral_arr
    cdef double[::1] tangent = tangent_arr
    cdef double[::1] arc = arc_arr

    for i in range(m):
        px = points[i, 0]
        py = points[i, 1]
        best = 0
        best_d2 = 1e300
        best_t = 0.0
        bqx = 0.0
        bqy = 0.0
        for k in range(n):
            ax = ring[k, 0]
            ay = ring[k, 1]
            dx = seg[k, 0]
            dy = seg[k, 1]
            t = ((px - ax) * dx + (py - ay) * dy) / (dx * dx + dy * dy)
            if t < 0.0:
                t = 0.0
            elif t > 1.0:
                t = 1.0
            qx = ax + t * dx
            qy = ay + t * dy
            ex = px - qx
            ey = py - qy
            d2 = ex * ex + ey * ey
            if d2 < best_d2:
                best_d2 = d2
                best = k
                best_t = t
                bqx = qx
                bqy = qy
        ex = px - bqx
        ey = py - bqy
        dist = hypot(ex, ey)
        cross = seg[best, 0] * ey - seg[best, 1] * ex
        nearest[i, 0] = bqx
        nearest[i, 1] = bqy
        lateral[i] = dist if cross >= 0.0 else -dist
        tangent[i] = heading[best]
        arc[i] = cum[best] + best_t * seglen[best]
    return nearest_arr, lateral_arr, tangent_arr, arc_arr


def collision_flags(const double[:, ::1] positions, Py_ssize_t n_agents, double radius):
    cdef Py_ssize_t n = positions.shape[0]
    cdef Py_ssize_t i, j
    cdef double limit = 2.0 * radius
    flags_arr = np.zeros(n_agents, dtype=np.int64)
    cdef long long[::1] flags = flags_arr
    for i in range(n_agents):
        for j in range(n):
            if j == i:
                continue
            if hypot(positions[i, 0] - positions[j, 0], positions[i, 1] - positions[j, 1]) < limit:
                flags[i] = 1
                break
    return flags_arr

"""NumPy versions of the geometry kernels, used when the extension is not built."""

import numpy as np


def project_points(points, ring, seg, seglen, cum, heading):
    points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    rel = points[:, None, :] - ring[None, :, :]
    t = (rel[..., 0] * seg[:, 0] + rel[..., 1] * seg[:, 1]) / (
        seg[:, 0] * seg[:, 0] + seg[:, 1] * seg[:, 1]
    )
    t = np.clip(t, 0.0, 1.0)
    qx = ring[:, 0] + t * seg[:, 0]
    qy = ring[:, 1] + t * seg[:, 1]
    ex = points[:, 0:1] - qx
    ey = points[:, 1:2] - qy
    best = np.argmin(ex * ex + ey * ey, axis=1)
    rows = np.arange(points.shape[0])
    bqx = qx[rows, best]
    bqy = qy[rows, best]
    ex = points[:, 0] - bqx
    ey = points[:, 1] - bqy
    dist = np.hypot(ex, ey)
    cross = seg[best, 0] * ey - seg[best, 1] * ex
    lateral = np.where(cross >= 0.0, dist, -dist)
    arc = cum[best] + t[rows, best] * seglen[best]
    return np.stack([bqx, bqy], axis=1), lateral, heading[best].copy(), arc


def collision_flags(positions, n_agents, radius):
    positions = np.asarray(positions, dtype=np.float64)
    dx = positions[:n_agents, None, 0] - positions[None, :, 0]
    dy = positions[:n_agents, None, 1] - positions[None, :, 1]
    close = np.hypot(dx, dy) < 2.0 * radius
    close[np.arange(n_agents), np.arange(n_agents)] = False
    return close.any(axis=1).astype(np.int64)

"""Closest-distance kernels between centre sets (segments and triangles).

The scalar routines follow the usual closest-point constructions
(clamped segment parameters, Voronoi regions of a triangle).  Batched
entry points loop over displacements and stop at the first primitive
pair closer than the contact distance, which keeps hit-or-miss
sampling cheap.
"""
import math

import numpy as np
from numba import njit

_EPS = 1e-300


@njit(cache=True)
def _dot(a0, a1, a2, b0, b1, b2):
    return a0 * b0 + a1 * b1 + a2 * b2


@njit(cache=True)
def seg_seg_dist2(p, q, r, s):
    """Squared distance between segments [p, q] and [r, s]."""
    d1x, d1y, d1z = q[0] - p[0], q[1] - p[1], q[2] - p[2]
    d2x, d2y, d2z = s[0] - r[0], s[1] - r[1], s[2] - r[2]
    rx, ry, rz = p[0] - r[0], p[1] - r[1], p[2] - r[2]
    a = _dot(d1x, d1y, d1z, d1x, d1y, d1z)
    e = _dot(d2x, d2y, d2z, d2x, d2y, d2z)
    f = _dot(d2x, d2y, d2z, rx, ry, rz)
    if a <= _EPS and e <= _EPS:
        return _dot(rx, ry, rz, rx, ry, rz)
    if a <= _EPS:
        sp = 0.0
        tp = min(max(f / e, 0.0), 1.0)
    else:
        c = _dot(d1x, d1y, d1z, rx, ry, rz)
        if e <= _EPS:
            tp = 0.0
            sp = min(max(-c / a, 0.0), 1.0)
        else:
            b = _dot(d1x, d1y, d1z, d2x, d2y, d2z)
            den = a * e - b * b
            if den > 1e-14 * a * e:
                sp = min(max((b * f - c * e) / den, 0.0), 1.0)
            else:
                sp = 0.0
            tp = (b * sp + f) / e
            if tp < 0.0:
                tp = 0.0
                sp = min(max(-c / a, 0.0), 1.0)
            elif tp > 1.0:
                tp = 1.0
                sp = min(max((b - c) / a, 0.0), 1.0)
    dx = rx + d1x * sp - d2x * tp
    dy = ry + d1y * sp - d2y * tp
    dz = rz + d1z * sp - d2z * tp
    return dx * dx + dy * dy + dz * dz


@njit(cache=True)
def point_tri_dist2(p, a, b, c):
    """Squared distance from point p to the filled triangle abc."""
    abx, aby, abz = b[0] - a[0], b[1] - a[1], b[2] - a[2]
    acx, acy, acz = c[0] - a[0], c[1] - a[1], c[2] - a[2]
    apx, apy, apz = p[0] - a[0], p[1] - a[1], p[2] - a[2]
    d1 = _dot(abx, aby, abz, apx, apy, apz)
    d2 = _dot(acx, acy, acz, apx, apy, apz)
    if d1 <= 0.0 and d2 <= 0.0:
        return apx * apx + apy * apy + apz * apz
    bpx, bpy, bpz = p[0] - b[0], p[1] - b[1], p[2] - b[2]
    d3 = _dot(abx, aby, abz, bpx, bpy, bpz)
    d4 = _dot(acx, acy, acz, bpx, bpy, bpz)
    if d3 >= 0.0 and d4 <= d3:
        return bpx * bpx + bpy * bpy + bpz * bpz
    vc = d1 * d4 - d3 * d2
    if vc <= 0.0 and d1 >= 0.0 and d3 <= 0.0:
        v = d1 / (d1 - d3)
        qx, qy, qz = apx - v * abx, apy - v * aby, apz - v * abz
        return qx * qx + qy * qy + qz * qz
    cpx, cpy, cpz = p[0] - c[0], p[1] - c[1], p[2] - c[2]
    d5 = _dot(abx, aby, abz, cpx, cpy, cpz)
    d6 = _dot(acx, acy, acz, cpx, cpy, cpz)
    if d6 >= 0.0 and d5 <= d6:
        return cpx * cpx + cpy * cpy + cpz * cpz
    vb = d5 * d2 - d1 * d6
    if vb <= 0.0 and d2 >= 0.0 and d6 <= 0.0:
        w = d2 / (d2 - d6)
        qx, qy, qz = apx - w * acx, apy - w * acy, apz - w * acz
        return qx * qx + qy * qy + qz * qz
    va = d3 * d6 - d5 * d4
    if va <= 0.0 and (d4 - d3) >= 0.0 and (d5 - d6) >= 0.0:
        w = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        qx = bpx - w * (c[0] - b[0])
        qy = bpy - w * (c[1] - b[1])
        qz = bpz - w * (c[2] - b[2])
        return qx * qx + qy * qy + qz * qz
    den = va + vb + vc
    if abs(den) <= _EPS:
        # degenerate triangle: fall back to its edges
        best = seg_seg_dist2(p, p, a, b)
        best = min(best, seg_seg_dist2(p, p, b, c))
        return min(best, seg_seg_dist2(p, p, c, a))
    v = vb / den
    w = vc / den
    qx = apx - abx * v - acx * w
    qy = apy - aby * v - acy * w
    qz = apz - abz * v - acz * w
    return qx * qx + qy * qy + qz * qz


@njit(cache=True)
def seg_crosses_tri(p, q, a, b, c):
    """True if segment [p, q] meets the triangle abc at an interior crossing."""
    nx = (b[1] - a[1]) * (c[2] - a[2]) - (b[2] - a[2]) * (c[1] - a[1])
    ny = (b[2] - a[2]) * (c[0] - a[0]) - (b[0] - a[0]) * (c[2] - a[2])
    nz = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    sp = nx * (p[0] - a[0]) + ny * (p[1] - a[1]) + nz * (p[2] - a[2])
    sq = nx * (q[0] - a[0]) + ny * (q[1] - a[1]) + nz * (q[2] - a[2])
    if sp * sq > 0.0 or sp == sq:
        return False
    t = sp / (sp - sq)
    x0 = p[0] + t * (q[0] - p[0])
    x1 = p[1] + t * (q[1] - p[1])
    x2 = p[2] + t * (q[2] - p[2])
    # barycentric sign test
    s1 = _tri_sign(x0, x1, x2, a, b, nx, ny, nz)
    s2 = _tri_sign(x0, x1, x2, b, c, nx, ny, nz)
    s3 = _tri_sign(x0, x1, x2, c, a, nx, ny, nz)
    return (s1 >= 0.0 and s2 >= 0.0 and s3 >= 0.0) or (s1 <= 0.0 and s2 <= 0.0 and s3 <= 0.0)


@njit(cache=True)
def _tri_sign(x0, x1, x2, u, v, nx, ny, nz):
    ex, ey, ez = v[0] - u[0], v[1] - u[1], v[2] - u[2]
    wx, wy, wz = x0 - u[0], x1 - u[1], x2 - u[2]
    cx = ey * wz - ez * wy
    cy = ez * wx - ex * wz
    cz = ex * wy - ey * wx
    return cx * nx + cy * ny + cz * nz


@njit(cache=True)
def _separated(p1, p2, axes, contact):
    """True if the projections of the two point sets on some unit axis are more than ``contact`` apart."""
    for k in range(axes.shape[0]):
        lo1 = math.inf
        hi1 = -math.inf
        for i in range(p1.shape[0]):
            v = p1[i, 0] * axes[k, 0] + p1[i, 1] * axes[k, 1] + p1[i, 2] * axes[k, 2]
            lo1 = min(lo1, v)
            hi1 = max(hi1, v)
        lo2 = math.inf
        hi2 = -math.inf
        for i in range(p2.shape[0]):
            v = p2[i, 0] * axes[k, 0] + p2[i, 1] * axes[k, 1] + p2[i, 2] * axes[k, 2]
            lo2 = min(lo2, v)
            hi2 = max(hi2, v)
        if lo1 - hi2 > contact or lo2 - hi1 > contact:
            return True
    return False


@njit(cache=True)
def tri_tri_dist2(t1, t2, stop2):
    """Squared distance between filled triangles (rows are vertices).

    Returns early with any value <= ``stop2`` once one is found.
    """
    best = math.inf
    for i in range(3):
        p = t1[i]
        q = t1[(i + 1) % 3]
        for j in range(3):
            d = seg_seg_dist2(p, q, t2[j], t2[(j + 1) % 3])
            if d < best:
                best = d
                if best <= stop2:
                    return best
    for i in range(3):
        d = point_tri_dist2(t1[i], t2[0], t2[1], t2[2])
        if d < best:
            best = d
            if best <= stop2:
                return best
        d = point_tri_dist2(t2[i], t1[0], t1[1], t1[2])
        if d < best:
            best = d
            if best <= stop2:
                return best
    for i in range(3):
        if seg_crosses_tri(t1[i], t1[(i + 1) % 3], t2[0], t2[1], t2[2]):
            return 0.0
        if seg_crosses_tri(t2[i], t2[(i + 1) % 3], t1[0], t1[1], t1[2]):
            return 0.0
    return best


@njit(cache=True)
def segset_dist2(s1, s2, stop2):
    """Squared distance between two unions of segments, arrays (k, 2, 3)."""
    best = math.inf
    for i in range(s1.shape[0]):
        for j in range(s2.shape[0]):
            d = seg_seg_dist2(s1[i, 0], s1[i, 1], s2[j, 0], s2[j, 1])
            if d < best:
                best = d
                if best <= stop2:
                    return best
    return best


def separating_axes(pts1, pts2):
    """Unit axes for the cheap rejection test: lab axes plus the plane normals."""
    axes = [np.eye(3)[k] for k in range(3)]
    for pts in (pts1, pts2):
        p = pts.reshape(-1, 3)
        if p.shape[0] >= 3:
            n = np.cross(p[1] - p[0], p[2] - p[0])
            if np.linalg.norm(n) > 1e-12:
                axes.append(n / np.linalg.norm(n))
    return np.array(axes)


@njit(cache=True)
def count_tri_overlaps(disp, t1, t2, contact, axes):
    """Number of displacements x with dist(T1 + x, T2) <= contact."""
    c2 = contact * contact
    moved = np.empty((3, 3))
    hits = 0
    for n in range(disp.shape[0]):
        for i in range(3):
            for k in range(3):
                moved[i, k] = t1[i, k] + disp[n, k]
        if _separated(moved, t2, axes, contact):
            continue
        if tri_tri_dist2(moved, t2, c2) <= c2:
            hits += 1
    return hits


@njit(cache=True)
def count_segset_overlaps(disp, s1, s2, contact, axes):
    c2 = contact * contact
    moved = np.empty_like(s1)
    flat1 = np.empty((2 * s1.shape[0], 3))
    flat2 = s2.reshape(-1, 3)
    hits = 0
    for n in range(disp.shape[0]):
        for i in range(s1.shape[0]):
            for e in range(2):
                for k in range(3):
                    moved[i, e, k] = s1[i, e, k] + disp[n, k]
                    flat1[2 * i + e, k] = moved[i, e, k]
        if _separated(flat1, flat2, axes, contact):
            continue
        if segset_dist2(moved, s2, c2) <= c2:
            hits += 1
    return hits


@njit(cache=True)
def tri_distances(disp, t1, t2):
    out = np.empty(disp.shape[0])
    moved = np.empty((3, 3))
    for n in range(disp.shape[0]):
        for i in range(3):
            for k in range(3):
                moved[i, k] = t1[i, k] + disp[n, k]
        out[n] = math.sqrt(tri_tri_dist2(moved, t2, -1.0))
    return out


@njit(cache=True)
def segset_distances(disp, s1, s2):
    out = np.empty(disp.shape[0])
    moved = np.empty_like(s1)
    for n in range(disp.shape[0]):
        for i in range(s1.shape[0]):
            for e in range(2):
                for k in range(3):
                    moved[i, e, k] = s1[i, e, k] + disp[n, k]
        out[n] = math.sqrt(segset_dist2(moved, s2, -1.0))
    return out

# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; bit-identical twins of ``_pykernels``.

The arithmetic here must stay in the exact order of the pure-Python
reference — both paths are asserted equal in the test suite.
"""

from libc.math cimport sqrt, log, INFINITY

import numpy as np

IMPL = "cython"

cdef extern from *:
    """
    typedef unsigned long long u64;
    """
    ctypedef unsigned long long u64

DEF GOLDEN = 0x9E3779B97F4A7C15
DEF INV_2_53 = 1.0 / 9007199254740992.0


cdef inline u64 _mix64(u64 z) nogil:
    z = (z ^ (z >> 30)) * <u64>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <u64>0x94D049BB133111EB
    return z ^ (z >> 31)


cdef inline double _u01(u64 key, u64 counter) nogil:
    cdef u64 raw = _mix64(key + (counter + 1) * <u64>GOLDEN)
    return (<double>(raw >> 11) + 0.5) * INV_2_53


cdef inline double _norm_inv(double p) nogil:
    cdef double q, r
    if p < 0.02425:
        q = sqrt(-2.0 * log(p))
        return ((((((-7.784894002430293e-03 * q + -3.223964580411365e-01) * q
                    + -2.400758277161838e+00) * q + -2.549732539343734e+00) * q
                  + 4.374664141464968e+00) * q + 2.938163982698783e+00)
                / ((((7.784695709041462e-03 * q + 3.224671290700398e-01) * q
                     + 2.445134137142996e+00) * q + 3.754408661907416e+00) * q + 1.0))
    if p <= 1.0 - 0.02425:
        q = p - 0.5
        r = q * q
        return ((((((-3.969683028665376e+01 * r + 2.209460984245205e+02) * r
                    + -2.759285104469687e+02) * r + 1.383577518672690e+02) * r
                  + -3.066479806614716e+01) * r + 2.506628277459239e+00) * q
                / (((((-5.447609879822406e+01 * r + 1.615858368580409e+02) * r
                      + -1.556989798598866e+02) * r + 6.680131188771972e+01) * r
                    + -1.328068155288572e+01) * r + 1.0))
    q = sqrt(-2.0 * log(1.0 - p))
    return -((((((-7.784894002430293e-03 * q + -3.223964580411365e-01) * q
                 + -2.400758277161838e+00) * q + -2.549732539343734e+00) * q
               + 4.374664141464968e+00) * q + 2.938163982698783e+00)
             / ((((7.784695709041462e-03 * q + 3.224671290700398e-01) * q
                  + 2.445134137142996e+00) * q + 3.754408661907416e+00) * q + 1.0))


def mix64(z):
    return _mix64(<u64>(z & 0xFFFFFFFFFFFFFFFF))


def u01(key, counter):
    return _u01(<u64>key, <u64>counter)


def fill_u01(key, counter0, double[::1] out):
    cdef u64 k = <u64>key
    cdef u64 c0 = <u64>counter0
    cdef Py_ssize_t i
    for i in range(out.shape[0]):
        out[i] = _u01(k, c0 + <u64>i)


def norm_inv(double p):
    return _norm_inv(p)


def std_normal(key, counter):
    return _norm_inv(_u01(<u64>key, <u64>counter))


cdef bint _pip(double px, double py, const double* xs, const double* ys,
               Py_ssize_t n) nogil:
    cdef bint inside = False
    cdef Py_ssize_t i, j
    cdef double xi, yi, xj, yj, cross, x_int, lo_x, hi_x, lo_y, hi_y
    j = n - 1
    for i in range(n):
        xi = xs[i]
        yi = ys[i]
        xj = xs[j]
        yj = ys[j]
        cross = (px - xi) * (yj - yi) - (py - yi) * (xj - xi)
        if cross == 0.0:
            if xi <= xj:
                lo_x = xi; hi_x = xj
            else:
                lo_x = xj; hi_x = xi
            if yi <= yj:
                lo_y = yi; hi_y = yj
            else:
                lo_y = yj; hi_y = yi
            if lo_x <= px <= hi_x and lo_y <= py <= hi_y:
                return True
        if (yi > py) != (yj > py):
            x_int = (xj - xi) * (py - yi) / (yj - yi) + xi
            if px < x_int:
                inside = not inside
        j = i
    return inside


def point_in_polygon(double px, double py, double[::1] xs, double[::1] ys):
    return bool(_pip(px, py, &xs[0], &ys[0], xs.shape[0]))


def polygon_assign(double[::1] pxs, double[::1] pys, long long[::1] poly_off,
                   double[::1] poly_xs, double[::1] poly_ys, long long[::1] out):
    cdef Py_ssize_t n_zones = poly_off.shape[0] - 1
    cdef Py_ssize_t i, z, a, b
    for i in range(pxs.shape[0]):
        out[i] = -1
        for z in range(n_zones):
            a = <Py_ssize_t>poly_off[z]
            b = <Py_ssize_t>poly_off[z + 1]
            if _pip(pxs[i], pys[i], &poly_xs[a], &poly_ys[a], b - a):
                out[i] = z
                break


cdef inline double _seg_dist(double px, double py, double x1, double y1,
                             double x2, double y2) nogil:
    cdef double dx = x2 - x1
    cdef double dy = y2 - y1
    cdef double l2 = dx * dx + dy * dy
    cdef double t, ex, ey
    if l2 == 0.0:
        ex = px - x1
        ey = py - y1
        return sqrt(ex * ex + ey * ey)
    t = ((px - x1) * dx + (py - y1) * dy) / l2
    if t < 0.0:
        t = 0.0
    elif t > 1.0:
        t = 1.0
    ex = px - (x1 + t * dx)
    ey = py - (y1 + t * dy)
    return sqrt(ex * ex + ey * ey)


def point_polygon_distance(double px, double py, double[::1] xs, double[::1] ys):
    cdef Py_ssize_t n = xs.shape[0]
    cdef Py_ssize_t i, j
    cdef double best, d
    if _pip(px, py, &xs[0], &ys[0], n):
        return 0.0
    best = INFINITY
    j = n - 1
    for i in range(n):
        d = _seg_dist(px, py, xs[j], ys[j], xs[i], ys[i])
        if d < best:
            best = d
        j = i
    return best


def pairs_within(double[::1] xs, double[::1] ys, double radius):
    cdef Py_ssize_t n = xs.shape[0]
    cdef double r2 = radius * radius
    cdef double dx, dy, d2
    cdef Py_ssize_t i, j
    ii = []
    jj = []
    dd = []
    for i in range(n):
        for j in range(i + 1, n):
            dx = xs[j] - xs[i]
            dy = ys[j] - ys[i]
            d2 = dx * dx + dy * dy
            if d2 <= r2:
                ii.append(i)
                jj.append(j)
                dd.append(sqrt(d2))
    return (np.asarray(ii, dtype=np.int64), np.asarray(jj, dtype=np.int64),
            np.asarray(dd, dtype=np.float64))


def count_within(double[::1] xs, double[::1] ys, double cx, double cy, double radius):
    cdef double r2 = radius * radius
    cdef double dx, dy
    cdef Py_ssize_t i
    cdef long long count = 0
    for i in range(xs.shape[0]):
        dx = xs[i] - cx
        dy = ys[i] - cy
        if dx * dx + dy * dy <= r2:
            count += 1
    return count


def crowd_step(double[::1] xs, double[::1] ys, double[::1] txs, double[::1] tys,
               unsigned long long[::1] keys, long long[::1] ctrs,
               double speed, double dt_s,
               double xmin, double ymin, double xmax, double ymax):
    cdef double step_len = speed * dt_s
    cdef double w = xmax - xmin
    cdef double h = ymax - ymin
    cdef double dx, dy, d
    cdef u64 key, c
    cdef Py_ssize_t i
    for i in range(xs.shape[0]):
        dx = txs[i] - xs[i]
        dy = tys[i] - ys[i]
        d = sqrt(dx * dx + dy * dy)
        if d <= step_len:
            xs[i] = txs[i]
            ys[i] = tys[i]
            key = keys[i]
            c = <u64>ctrs[i]
            txs[i] = xmin + _u01(key, c) * w
            tys[i] = ymin + _u01(key, c + 1) * h
            ctrs[i] = <long long>(c + 2)
        else:
            xs[i] = xs[i] + dx / d * step_len
            ys[i] = ys[i] + dy / d * step_len


def sense_step(unsigned long long[::1] keys, long long step_idx,
               double[::1] txs, double[::1] tys, double[::1] tzs,
               unsigned char[::1] active, double sx, double sy, double cov_r,
               double p_eff, double sigma, unsigned char[::1] out_emit,
               double[::1] out_x, double[::1] out_y, double[::1] out_z):
    cdef double cov2 = cov_r * cov_r
    cdef u64 base = 4 * <u64>step_idx
    cdef long long n_emit = 0
    cdef double dx, dy
    cdef u64 key
    cdef Py_ssize_t i
    for i in range(txs.shape[0]):
        out_emit[i] = 0
        if not active[i]:
            continue
        dx = txs[i] - sx
        dy = tys[i] - sy
        if dx * dx + dy * dy > cov2:
            continue
        key = keys[i]
        if _u01(key, base) < p_eff:
            out_emit[i] = 1
            out_x[i] = txs[i] + _norm_inv(_u01(key, base + 1)) * sigma
            out_y[i] = tys[i] + _norm_inv(_u01(key, base + 2)) * sigma
            out_z[i] = tzs[i] + _norm_inv(_u01(key, base + 3)) * sigma
            n_emit += 1
    return n_emit


def loiter_windows(long long[::1] ts, double[::1] xs, double[::1] ys,
                   double radius, long long min_ms):
    cdef Py_ssize_t n = ts.shape[0]
    cdef double r2 = radius * radius
    cdef double xi, yi, dx, dy
    cdef Py_ssize_t i, j
    cdef Py_ssize_t best_reach = -1
    out = []
    for i in range(n):
        xi = xs[i]
        yi = ys[i]
        j = i
        while j + 1 < n:
            dx = xs[j + 1] - xi
            dy = ys[j + 1] - yi
            if dx * dx + dy * dy <= r2:
                j += 1
            else:
                break
        if ts[j] - ts[i] >= min_ms and j > best_reach:
            out.append((i, j))
            best_reach = j
    return out

"""Pure-Python reference kernels.

Every function here has a compiled twin in ``_ext.pyx``; the two must
produce bit-identical results (asserted in tests). Keep the arithmetic
scalar and in the same order as the C code — no numpy vectorization, no
``math.hypot`` (CPython's hypot is not the libm one).

Selected at import time by ``dtss.kernels`` when the extension is missing
or DTSS_PURE_PY=1.
"""

import math

import numpy as np

IMPL = "python"

_M64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_INV_2_53 = 1.0 / 9007199254740992.0  # 2**-53


def mix64(z):
    """splitmix64 finalizer (Stafford mix); bijective on 64-bit ints."""
    z &= _M64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
    return z ^ (z >> 31)


def u01(key, counter):
    """Counter-based uniform draw in (0,1): draw i of stream `key`."""
    raw = mix64((key + ((counter + 1) * _GOLDEN)) & _M64)
    return ((raw >> 11) + 0.5) * _INV_2_53


def fill_u01(key, counter0, out):
    key = int(key)
    for i in range(len(out)):
        out[i] = u01(key, counter0 + i)


# Acklam's rational approximation to the inverse normal CDF
# (|relative error| < 1.15e-9 over (0,1)).
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)
_P_LOW = 0.02425


def norm_inv(p):
    """Inverse standard-normal CDF, Acklam's method."""
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        return ((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5])
                / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0))
    if p <= 1.0 - _P_LOW:
        q = p - 0.5
        r = q * q
        return ((((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
                / (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0))
    q = math.sqrt(-2.0 * math.log(1.0 - p))
    return -((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5])
             / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0))


def std_normal(key, counter):
    """Counter-based standard normal draw."""
    return norm_inv(u01(key, counter))


def point_in_polygon(px, py, xs, ys):
    """Even-odd rule; a point exactly on the boundary counts as inside."""
    n = len(xs)
    inside = False
    j = n - 1
    for i in range(n):
        xi = xs[i]
        yi = ys[i]
        xj = xs[j]
        yj = ys[j]
        cross = (px - xi) * (yj - yi) - (py - yi) * (xj - xi)
        if cross == 0.0:
            lo_x, hi_x = (xi, xj) if xi <= xj else (xj, xi)
            lo_y, hi_y = (yi, yj) if yi <= yj else (yj, yi)
            if lo_x <= px <= hi_x and lo_y <= py <= hi_y:
                return True
        if (yi > py) != (yj > py):
            x_int = (xj - xi) * (py - yi) / (yj - yi) + xi
            if px < x_int:
                inside = not inside
        j = i
    return inside


def polygon_assign(pxs, pys, poly_off, poly_xs, poly_ys, out):
    """out[i] = index of the first polygon containing point i, else -1."""
    n_zones = len(poly_off) - 1
    for i in range(len(pxs)):
        out[i] = -1
        for z in range(n_zones):
            a = poly_off[z]
            b = poly_off[z + 1]
            if point_in_polygon(pxs[i], pys[i], poly_xs[a:b], poly_ys[a:b]):
                out[i] = z
                break


def _seg_dist(px, py, x1, y1, x2, y2):
    dx = x2 - x1
    dy = y2 - y1
    l2 = dx * dx + dy * dy
    if l2 == 0.0:
        ex = px - x1
        ey = py - y1
        return math.sqrt(ex * ex + ey * ey)
    t = ((px - x1) * dx + (py - y1) * dy) / l2
    if t < 0.0:
        t = 0.0
    elif t > 1.0:
        t = 1.0
    ex = px - (x1 + t * dx)
    ey = py - (y1 + t * dy)
    return math.sqrt(ex * ex + ey * ey)


def point_polygon_distance(px, py, xs, ys):
    """Distance from a point to a polygon; 0 when inside or on boundary."""
    if point_in_polygon(px, py, xs, ys):
        return 0.0
    n = len(xs)
    best = math.inf
    j = n - 1
    for i in range(n):
        d = _seg_dist(px, py, xs[j], ys[j], xs[i], ys[i])
        if d < best:
            best = d
        j = i
    return best


def pairs_within(xs, ys, radius):
    """All index pairs (i<j) with 2D distance <= radius, plus distances."""
    n = len(xs)
    r2 = radius * radius
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
                dd.append(math.sqrt(d2))
    return (np.asarray(ii, dtype=np.int64), np.asarray(jj, dtype=np.int64),
            np.asarray(dd, dtype=np.float64))


def count_within(xs, ys, cx, cy, radius):
    r2 = radius * radius
    count = 0
    for i in range(len(xs)):
        dx = xs[i] - cx
        dy = ys[i] - cy
        if dx * dx + dy * dy <= r2:
            count += 1
    return count


def crowd_step(xs, ys, txs, tys, keys, ctrs, speed, dt_s, xmin, ymin, xmax, ymax):
    """Advance random-waypoint walkers by one step, in place.

    A walker within one step of its target snaps to it and draws the next
    target from its own counter-based stream (2 uniforms).
    """
    step_len = speed * dt_s
    w = xmax - xmin
    h = ymax - ymin
    for i in range(len(xs)):
        dx = txs[i] - xs[i]
        dy = tys[i] - ys[i]
        d = math.sqrt(dx * dx + dy * dy)
        if d <= step_len:
            xs[i] = txs[i]
            ys[i] = tys[i]
            key = int(keys[i])
            c = int(ctrs[i])
            txs[i] = xmin + u01(key, c) * w
            tys[i] = ymin + u01(key, c + 1) * h
            ctrs[i] = c + 2
        else:
            xs[i] = xs[i] + dx / d * step_len
            ys[i] = ys[i] + dy / d * step_len


def sense_step(keys, step_idx, txs, tys, tzs, active, sx, sy, cov_r, p_eff,
               sigma, out_emit, out_x, out_y, out_z):
    """One sensor sampling pass over all targets for one time step.

    Draws are keyed per (sensor, target) with counters derived from the
    step index alone, so the draw for one pair never depends on which
    other sensors, targets, or steps exist.
    """
    cov2 = cov_r * cov_r
    base = 4 * step_idx
    n_emit = 0
    for i in range(len(txs)):
        out_emit[i] = 0
        if not active[i]:
            continue
        dx = txs[i] - sx
        dy = tys[i] - sy
        if dx * dx + dy * dy > cov2:
            continue
        key = int(keys[i])
        if u01(key, base) < p_eff:
            out_emit[i] = 1
            out_x[i] = txs[i] + norm_inv(u01(key, base + 1)) * sigma
            out_y[i] = tys[i] + norm_inv(u01(key, base + 2)) * sigma
            out_z[i] = tzs[i] + norm_inv(u01(key, base + 3)) * sigma
            n_emit += 1
    return n_emit


def loiter_windows(ts, xs, ys, radius, min_ms):
    """Maximal anchored dwell windows.

    A window anchored at sample i extends to reach(i), the last index j
    such that every sample in i..j stays within `radius` of sample i. The
    window qualifies when its duration reaches `min_ms`; it is emitted
    unless an earlier qualifying window already reaches at least as far.
    Returns (anchor, end) index pairs.
    """
    n = len(ts)
    r2 = radius * radius
    out = []
    best_reach = -1
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

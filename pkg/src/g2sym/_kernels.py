"""Scalar hot loops, compiled with numba when available.

Everything here works on plain floats and numpy arrays so the same source
also runs uncompiled (see :mod:`g2sym._jit`).
"""

import numpy as np

from ._jit import njit

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = np.array([
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1 / 5, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3 / 40, 9 / 40, 0.0, 0.0, 0.0, 0.0],
    [44 / 45, -56 / 15, 32 / 9, 0.0, 0.0, 0.0],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0.0, 0.0],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656, 0.0],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
])
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4

NSTATE = 5  # a, b, x1, x2, r
CSTEP = 1e-30


@njit
def lambda_enhanced(a, b, c1, c2):
    """Lambda restricted to a2 = a3 = a, a1 = b."""
    s = b * b + c1 * c2
    return -(4.0 * a * a * (b - c1) * (b + c2) - s * s)


@njit
def lambda_grad(a, b, c1, c2):
    """(dLambda/da, dLambda/db) for the enhanced Lambda."""
    s = b * b + c1 * c2
    da = -8.0 * a * (b - c1) * (b + c2)
    db = -(4.0 * a * a * (2.0 * b - c1 + c2) - 4.0 * b * s)
    return da, db


@njit
def fhn_rhs(y, c1, c2, bs_c):
    """Right-hand side on (a, b, x1, x2, r); r follows dr/dt = (c + r^2)^(1/6)/2.

    Accepts real or complex arrays (the latter for complex-step derivatives).
    When ``bs_c`` is negative the r component is frozen.
    """
    a = y[0]
    b = y[1]
    x1 = y[2]
    x2 = y[3]
    out = np.empty_like(y)
    root = np.sqrt(x1 * x1 * x2)
    s = b * b + c1 * c2
    neg_lam = 4.0 * a * a * (b - c1) * (b + c2) - s * s
    sq = np.sqrt(neg_lam)
    lam_a = -8.0 * a * (b - c1) * (b + c2)
    lam_b = -(4.0 * a * a * (2.0 * b - c1 + c2) - 4.0 * b * s)
    out[0] = x1 * x2 / root
    out[1] = x1 * x1 / root
    out[2] = -lam_a / (4.0 * sq)
    out[3] = -lam_b / (2.0 * sq)
    if bs_c >= 0.0:
        out[4] = 0.5 * (bs_c + y[4] * y[4]) ** (1.0 / 6.0)
    else:
        out[4] = 0.0 * y[4]
    return out


@njit
def fhn_second_derivative(y, f, c1, c2, bs_c):
    """Second time derivative J(y) f via a complex step."""
    yc = y.astype(np.complex128) + 1j * CSTEP * f.astype(np.complex128)
    fc = fhn_rhs(yc, c1, c2, bs_c)
    return fc.imag / CSTEP


@njit
def _inside(y, c1, c2):
    if not (np.isfinite(y[0]) and np.isfinite(y[1]) and np.isfinite(y[2]) and np.isfinite(y[3])):
        return False
    if y[2] <= 0.0 or y[3] <= 0.0:
        return False
    return lambda_enhanced(y[0], y[1], c1, c2) < 0.0


@njit
def _dp_step(y, f0, h, c1, c2, bs_c):
    """One Dormand-Prince step; returns (y_new, f_new, err_vector)."""
    n = y.shape[0]
    k = np.zeros((7, n))
    k[0] = f0
    for s in range(1, 7):
        ys = y.copy()
        for j in range(s):
            if _A[s, j] != 0.0:
                ys += h * _A[s, j] * k[j]
        k[s] = fhn_rhs(ys, c1, c2, bs_c)
    y_new = y.copy()
    err = np.zeros(n)
    for s in range(7):
        y_new += h * _B5[s] * k[s]
        err += h * _E[s] * k[s]
    return y_new, k[6], err


@njit
def integrate_fhn(y0, t0, t_end, c1, c2, bs_c, rtol, atol, h0, max_steps, max_step):
    """Adaptive Dormand-Prince integration of the enhanced FHN system.

    Returns ``(ts, ys, fs, gs, status)`` where ``fs`` and ``gs`` hold first
    and second derivatives at the nodes.  ``status`` is 0 when ``t_end`` was
    reached, 1 on cone exit, 2 on step-size underflow, 3 on step-count limit.
    Integration runs backwards when ``t_end < t0``.
    """
    n = y0.shape[0]
    direction = 1.0 if t_end >= t0 else -1.0
    span = abs(t_end - t0)
    ts = np.empty(max_steps + 1)
    ys = np.empty((max_steps + 1, n))
    fs = np.empty((max_steps + 1, n))
    gs = np.empty((max_steps + 1, n))
    t = t0
    y = y0.copy()
    f = fhn_rhs(y, c1, c2, bs_c)
    ts[0] = t
    ys[0] = y
    fs[0] = f
    gs[0] = fhn_second_derivative(y, f, c1, c2, bs_c)
    count = 1
    h = min(abs(h0), max_step, span) if span > 0.0 else 0.0
    hmin = 1e-14 * max(1.0, abs(t0), abs(t_end))
    status = 0
    while direction * (t_end - t) > 1e-15 * max(1.0, abs(t_end)):
        if count > max_steps:
            status = 3
            break
        if h > abs(t_end - t):
            h = abs(t_end - t)
        y_new, f_new, err = _dp_step(y, f, direction * h, c1, c2, bs_c)
        finite = True
        for i in range(n):
            if not np.isfinite(y_new[i]) or not np.isfinite(err[i]) or not np.isfinite(f_new[i]):
                finite = False
        if not finite:
            if h < 1e-12 * max(1.0, abs(t)):
                status = 1
                break
            h *= 0.25
            continue
        enorm = 0.0
        for i in range(n):
            sc = atol + rtol * max(abs(y[i]), abs(y_new[i]))
            e = abs(err[i]) / sc
            if e > enorm:
                enorm = e
        if enorm > 1.0:
            h *= max(0.2, 0.9 * enorm ** -0.2)
            if h < hmin:
                status = 2
                break
            continue
        if not _inside(y_new, c1, c2):
            # bisect the step length for the first point leaving the cone
            lo = 0.0
            hi = h
            y_lo = y.copy()
            f_lo = f.copy()
            while hi - lo > 1e-12:
                mid = 0.5 * (lo + hi)
                y_mid, f_mid, _ = _dp_step(y, f, direction * mid, c1, c2, bs_c)
                ok = _inside(y_mid, c1, c2)
                for i in range(n):
                    if not np.isfinite(f_mid[i]):
                        ok = False
                if ok:
                    lo = mid
                    y_lo = y_mid
                    f_lo = f_mid
                else:
                    hi = mid
            if lo > 0.0:
                t = t + direction * lo
                ts[count] = t
                ys[count] = y_lo
                fs[count] = f_lo
                gs[count] = fhn_second_derivative(y_lo, f_lo, c1, c2, bs_c)
                count += 1
            status = 1
            break
        t = t + direction * h
        y = y_new
        f = f_new
        ts[count] = t
        ys[count] = y
        fs[count] = f
        gs[count] = fhn_second_derivative(y, f, c1, c2, bs_c)
        count += 1
        fac = 5.0 if enorm == 0.0 else min(5.0, max(0.2, 0.9 * enorm ** -0.2))
        h = min(h * fac, max_step)
    return ts[:count], ys[:count], fs[:count], gs[:count], status


@njit
def hermite5(t0, t1, y0, d0, s0, y1, d1, s1, t, order):
    """Quintic Hermite interpolant on [t0, t1] matching value, slope, curvature.

    ``order`` selects value (0), first (1) or second (2) derivative.
    """
    h = t1 - t0
    u = (t - t0) / h
    p0 = y0
    p1 = d0 * h
    p2 = s0 * h * h
    q0 = y1
    q1 = d1 * h
    q2 = s1 * h * h
    u2 = u * u
    u3 = u2 * u
    u4 = u3 * u
    u5 = u4 * u
    if order == 0:
        h00 = 1 - 10 * u3 + 15 * u4 - 6 * u5
        h10 = u - 6 * u3 + 8 * u4 - 3 * u5
        h20 = 0.5 * (u2 - 3 * u3 + 3 * u4 - u5)
        h01 = 10 * u3 - 15 * u4 + 6 * u5
        h11 = -4 * u3 + 7 * u4 - 3 * u5
        h21 = 0.5 * (u3 - 2 * u4 + u5)
        return h00 * p0 + h10 * p1 + h20 * p2 + h01 * q0 + h11 * q1 + h21 * q2
    if order == 1:
        h00 = -30 * u2 + 60 * u3 - 30 * u4
        h10 = 1 - 18 * u2 + 32 * u3 - 15 * u4
        h20 = 0.5 * (2 * u - 9 * u2 + 12 * u3 - 5 * u4)
        h01 = 30 * u2 - 60 * u3 + 30 * u4
        h11 = -12 * u2 + 28 * u3 - 15 * u4
        h21 = 0.5 * (3 * u2 - 8 * u3 + 5 * u4)
        return (h00 * p0 + h10 * p1 + h20 * p2 + h01 * q0 + h11 * q1 + h21 * q2) / h
    h00 = -60 * u + 180 * u2 - 120 * u3
    h10 = -36 * u + 96 * u2 - 60 * u3
    h20 = 0.5 * (2 - 18 * u + 36 * u2 - 20 * u3)
    h01 = 60 * u - 180 * u2 + 120 * u3
    h11 = -24 * u + 84 * u2 - 60 * u3
    h21 = 0.5 * (6 * u - 24 * u2 + 20 * u3)
    return (h00 * p0 + h10 * p1 + h20 * p2 + h01 * q0 + h11 * q1 + h21 * q2) / (h * h)


@njit
def locate(ts, t):
    """Index k with ts[k] <= t <= ts[k+1] (clamped to the table)."""
    n = ts.shape[0]
    if t <= ts[0]:
        return 0
    if t >= ts[n - 1]:
        return n - 2
    lo = 0
    hi = n - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ts[mid] <= t:
            lo = mid
        else:
            hi = mid
    return lo


@njit
def table_eval(ts, ys, ds, ss, t, column, order):
    """Evaluate column ``column`` of a Hermite table at ``t``."""
    k = locate(ts, t)
    return hermite5(ts[k], ts[k + 1], ys[k, column], ds[k, column], ss[k, column],
                    ys[k + 1, column], ds[k + 1, column], ss[k + 1, column], t, order)


@njit
def table_eval_many(ts, ys, ds, ss, tq, order):
    """Evaluate every column of a Hermite table at each query time."""
    out = np.empty((tq.shape[0], ys.shape[1]))
    for i in range(tq.shape[0]):
        k = locate(ts, tq[i])
        for c in range(ys.shape[1]):
            out[i, c] = hermite5(ts[k], ts[k + 1], ys[k, c], ds[k, c], ss[k, c],
                                 ys[k + 1, c], ds[k + 1, c], ss[k + 1, c], tq[i], order)
    return out


@njit
def eta_integrand(ts, ys, ds, ss, t, c1, c2):
    """(2 b a^2 + c2 (b^2 + 2 a^2 + c1 c2)) / sqrt(-Lambda) on a Hermite table."""
    a = table_eval(ts, ys, ds, ss, t, 0, 0)
    b = table_eval(ts, ys, ds, ss, t, 1, 0)
    neg_lam = -lambda_enhanced(a, b, c1, c2)
    if neg_lam <= 0.0:
        return 0.0
    return (2.0 * b * a * a + c2 * (b * b + 2.0 * a * a + c1 * c2)) / np.sqrt(neg_lam)


@njit
def _simpson(fa, fm, fb, lo, hi):
    return (hi - lo) / 6.0 * (fa + 4.0 * fm + fb)


@njit
def adaptive_simpson_eta(ts, ys, ds, ss, lo, hi, c1, c2, tol):
    """Adaptive Simpson quadrature of :func:`eta_integrand` on [lo, hi]."""
    if hi == lo:
        return 0.0
    stack_lo = np.empty(200)
    stack_hi = np.empty(200)
    stack_fa = np.empty(200)
    stack_fm = np.empty(200)
    stack_fb = np.empty(200)
    stack_tol = np.empty(200)
    stack_depth = np.empty(200, dtype=np.int64)
    fa = eta_integrand(ts, ys, ds, ss, lo, c1, c2)
    fb = eta_integrand(ts, ys, ds, ss, hi, c1, c2)
    fm = eta_integrand(ts, ys, ds, ss, 0.5 * (lo + hi), c1, c2)
    top = 0
    stack_lo[0] = lo
    stack_hi[0] = hi
    stack_fa[0] = fa
    stack_fm[0] = fm
    stack_fb[0] = fb
    stack_tol[0] = tol
    stack_depth[0] = 0
    total = 0.0
    while top >= 0:
        a = stack_lo[top]
        b = stack_hi[top]
        fa = stack_fa[top]
        fm = stack_fm[top]
        fb = stack_fb[top]
        eps = stack_tol[top]
        depth = stack_depth[top]
        top -= 1
        m = 0.5 * (a + b)
        flm = eta_integrand(ts, ys, ds, ss, 0.5 * (a + m), c1, c2)
        frm = eta_integrand(ts, ys, ds, ss, 0.5 * (m + b), c1, c2)
        whole = _simpson(fa, fm, fb, a, b)
        left = _simpson(fa, flm, fm, a, m)
        right = _simpson(fm, frm, fb, m, b)
        delta = left + right - whole
        if abs(delta) <= 15.0 * eps or depth >= 50 or top >= 196:
            total += left + right + delta / 15.0
        else:
            top += 1
            stack_lo[top] = a
            stack_hi[top] = m
            stack_fa[top] = fa
            stack_fm[top] = flm
            stack_fb[top] = fm
            stack_tol[top] = 0.5 * eps
            stack_depth[top] = depth + 1
            top += 1
            stack_lo[top] = m
            stack_hi[top] = b
            stack_fa[top] = fm
            stack_fm[top] = frm
            stack_fb[top] = fb
            stack_tol[top] = 0.5 * eps
            stack_depth[top] = depth + 1
    return total


@njit
def eta_prefix(ts, ys, ds, ss, c1, c2, tol):
    """Cumulative integrals of the eta integrand at every node."""
    out = np.zeros(ts.shape[0])
    for k in range(1, ts.shape[0]):
        out[k] = out[k - 1] + adaptive_simpson_eta(ts, ys, ds, ss, ts[k - 1], ts[k], c1, c2, tol)
    return out


# -- level-set continuation on the (theta, t) quotient -----------------------

MODEL_FHN = 0
MODEL_BS = 1
CURVE_ASSOC = 0
CURVE_COASSOC = 1

END_OPEN = -1
END_THETA_0 = 0
END_THETA_PI = 1
END_LOW = 2
END_HIGH = 3
END_STALL = 4


@njit
def quotient_uv(model, ts, ys, ds, ss, c1, c, t):
    """Amplitudes ``u, v`` with ``|mu| = u sin(theta)``, ``nu = v cos(theta)``, and their t-derivatives."""
    if model == MODEL_FHN:
        x1 = table_eval(ts, ys, ds, ss, t, 2, 0)
        dx1 = table_eval(ts, ys, ds, ss, t, 2, 1)
        b = table_eval(ts, ys, ds, ss, t, 1, 0)
        db = table_eval(ts, ys, ds, ss, t, 1, 1)
        return 4.0 * x1, 4.0 * dx1, -4.0 * (b - c1), -4.0 * db
    r = table_eval(ts, ys, ds, ss, t, 4, 0)
    dr = table_eval(ts, ys, ds, ss, t, 4, 1)
    s = c + r * r
    cube = s ** (1.0 / 3.0)
    u = 3.0 * r * r * cube
    du = (6.0 * r * cube + 2.0 * r ** 3 / (s / cube)) * dr
    root3 = np.sqrt(3.0)
    return u, du, 2.0 * root3 * r * r, 4.0 * root3 * r * dr


@njit
def level_function(model, curve, ts, ys, ds, ss, c1, c, level, theta, t):
    """Value and gradient ``(F, F_theta, F_t)`` of the defining function minus ``level``."""
    u, du, v, dv = quotient_uv(model, ts, ys, ds, ss, c1, c, t)
    if curve == CURVE_ASSOC:
        return u * np.sin(theta) - level, u * np.cos(theta), du * np.sin(theta)
    return v * np.cos(theta) - level, -v * np.sin(theta), dv * np.cos(theta)


@njit
def _newton(model, curve, ts, ys, ds, ss, c1, c, level, theta, t, tol):
    for _ in range(30):
        f, ft, fs = level_function(model, curve, ts, ys, ds, ss, c1, c, level, theta, t)
        if abs(f) <= tol:
            return theta, t, True
        g2 = ft * ft + fs * fs
        if g2 == 0.0:
            return theta, t, False
        theta -= f * ft / g2
        t -= f * fs / g2
        if t < ts[0] or t > ts[-1]:
            return theta, t, False
    f, ft, fs = level_function(model, curve, ts, ys, ds, ss, c1, c, level, theta, t)
    return theta, t, abs(f) <= tol


@njit
def _edge_solve(model, curve, ts, ys, ds, ss, c1, c, level, theta, t, fix_theta, tol):
    """Newton on one coordinate with the other held on a boundary."""
    for _ in range(60):
        f, ft, fs = level_function(model, curve, ts, ys, ds, ss, c1, c, level, theta, t)
        if abs(f) <= tol:
            return theta, t, True
        if fix_theta:
            if fs == 0.0:
                return theta, t, False
            t -= f / fs
            if t < ts[0] or t > ts[-1]:
                return theta, t, False
        else:
            if ft == 0.0:
                return theta, t, False
            theta -= f / ft
            if theta < 0.0 or theta > np.pi:
                return theta, t, False
    return theta, t, False


@njit
def trace_branch(model, curve, ts, ys, ds, ss, c1, c, level, theta0, t0, direction, h,
                 theta_tol, max_points):
    """Follow one branch of ``{F = level}`` from a point on it.

    Tangent predictor of length ``h`` followed by a Newton corrector along the
    gradient.  Returns the polyline and an end code (``END_*``).
    """
    tol = 1e-12 * (1.0 + abs(level))
    out = np.empty((max_points, 2))
    out[0, 0] = theta0
    out[0, 1] = t0
    n = 1
    theta, t = theta0, t0
    step = h
    h_min = h * 1e-6
    t_lo, t_hi = ts[0], ts[-1]
    prev_dt = 0.0
    prev_ds = 0.0
    while n < max_points:
        f, ft, fs = level_function(model, curve, ts, ys, ds, ss, c1, c, level, theta, t)
        g = np.sqrt(ft * ft + fs * fs)
        if g == 0.0:
            return out[:n], END_STALL
        d_theta = -direction * fs / g
        d_t = direction * ft / g
        if n > 1 and d_theta * prev_dt + d_t * prev_ds < 0.0:
            d_theta, d_t = -d_theta, -d_t
        pt = theta + step * d_theta
        ps = t + step * d_t
        edge = END_OPEN
        if pt <= 0.0:
            edge = END_THETA_0
        elif pt >= np.pi:
            edge = END_THETA_PI
        elif ps <= t_lo:
            edge = END_LOW
        elif ps >= t_hi:
            edge = END_HIGH
        if edge != END_OPEN:
            # land exactly on the boundary when the curve reaches it
            if edge == END_THETA_0 or edge == END_THETA_PI:
                bt = 0.0 if edge == END_THETA_0 else np.pi
                et, es, ok = _edge_solve(model, curve, ts, ys, ds, ss, c1, c, level, bt, ps, True, tol)
            else:
                bs = t_lo if edge == END_LOW else t_hi
                et, es, ok = _edge_solve(model, curve, ts, ys, ds, ss, c1, c, level, pt, bs, False, tol)
            if ok and abs(et - theta) + abs(es - t) <= 2.0 * step:
                out[n, 0] = et
                out[n, 1] = es
                return out[:n + 1], edge
            if step > h_min:
                step *= 0.5
                continue
            if edge == END_THETA_0 or edge == END_THETA_PI:
                if min(theta, np.pi - theta) <= theta_tol:
                    return out[:n], edge
            return out[:n], END_STALL
        nt, ns, ok = _newton(model, curve, ts, ys, ds, ss, c1, c, level, pt, ps, tol)
        dist = np.sqrt((nt - theta) ** 2 + (ns - t) ** 2)
        if not ok or dist > 1.5 * step or nt <= 0.0 or nt >= np.pi:
            if step > h_min:
                step *= 0.5
                continue
            return out[:n], END_STALL
        prev_dt = nt - theta
        prev_ds = ns - t
        theta, t = nt, ns
        out[n, 0] = theta
        out[n, 1] = t
        n += 1
        if step < h:
            step = min(h, 2.0 * step)
    return out[:n], END_OPEN

"""Compiled inner loops for the time steppers.

Motility and response families are passed as flat scalars plus the
piecewise-cubic coefficient table used by tabulated motility (see
``MotilitySpec.kernel_args``).  Arrays ``u``, ``v``, ``w`` are updated in place.
"""
import math

import numpy as np
from numba import njit

OK, NEGATIVE, NONFINITE, SINGULAR, MAX_STEPS = 0, 1, 2, 3, 4
PIVOT_MIN = 1e-14


@njit(cache=True)
def gamma_at(kind, a, b, c, knots, coefs, v):
    # tiny negatives (within the negativity slack) are read as zero
    if v < 0.0:
        v = 0.0
    if kind == 0:
        return b + a * math.exp(-c * v)
    if kind == 1:
        return b
    m = knots.shape[0]
    if v <= knots[0]:
        return coefs[3, 0]
    if v >= knots[m - 1]:
        j = m - 2
        s = knots[m - 1] - knots[j]
    else:
        j = np.searchsorted(knots, v, side="right") - 1
        s = v - knots[j]
    return ((coefs[0, j] * s + coefs[1, j]) * s + coefs[2, j]) * s + coefs[3, j]


@njit(cache=True)
def response_at(kind, lam, m, w):
    if w <= 0.0:
        return 0.0
    if kind == 0:
        return w
    if kind == 1:
        return w / (lam + w)
    wm = w**m
    return wm / (lam + wm)


@njit(cache=True)
def thomas(sub, diag, sup, rhs, out, work):
    """Solve a tridiagonal system; ``sub[0]`` and ``sup[-1]`` are ignored.

    Returns False on a pivot smaller than PIVOT_MIN in magnitude.
    """
    n = diag.shape[0]
    piv = diag[0]
    if abs(piv) < PIVOT_MIN:
        return False
    work[0] = sup[0] / piv
    out[0] = rhs[0] / piv
    for i in range(1, n):
        piv = diag[i] - sub[i] * work[i - 1]
        if abs(piv) < PIVOT_MIN:
            return False
        if i < n - 1:
            work[i] = sup[i] / piv
        out[i] = (rhs[i] - sub[i] * out[i - 1]) / piv
    for i in range(n - 2, -1, -1):
        out[i] -= work[i] * out[i + 1]
    return True


@njit(cache=True)
def _lap(f, inv_dx2, out):
    n = f.shape[0]
    out[0] = (f[1] - f[0]) * inv_dx2
    for i in range(1, n - 1):
        out[i] = ((f[i + 1] - f[i]) - (f[i] - f[i - 1])) * inv_dx2
    out[n - 1] = (f[n - 2] - f[n - 1]) * inv_dx2


@njit(cache=True)
def _implicit_matrix(coef, dt, inv_dx2, shift, sub, diag, sup):
    # rows of (1 + shift) I - dt * Lap_h * diag(coef)
    n = coef.shape[0]
    for i in range(n):
        nb = 2.0 if 0 < i < n - 1 else 1.0
        diag[i] = 1.0 + shift + dt * coef[i] * nb * inv_dx2
        sub[i] = -dt * coef[i - 1] * inv_dx2 if i > 0 else 0.0
        sup[i] = -dt * coef[i + 1] * inv_dx2 if i < n - 1 else 0.0


@njit(cache=True)
def advance(u, v, w, t, t_target, dx, alpha, theta, dcoef,
            mk, ma, mb, mc, knots, coefs, rk, rlam, rm,
            imex, auto_dt, dt_fixed, sigma, max_steps, eps_neg):
    """Advance (u, v, w) from ``t`` to ``t_target``.

    Returns (t, steps, theta_integral, consumption, max_w_rise, status).
    ``theta_integral`` is the trapezoid sum of theta * dt * mass_u and
    ``consumption`` the exact discrete counterpart of the time integral of
    the spatial integral of u F(w).
    """
    n = u.shape[0]
    inv_dx2 = 1.0 / (dx * dx)
    g = np.empty(n)
    p = np.empty(n)
    r = np.empty(n)
    lp = np.empty(n)
    lv = np.empty(n)
    lw = np.empty(n)
    sub = np.empty(n)
    diag = np.empty(n)
    sup = np.empty(n)
    rhs = np.empty(n)
    delta = np.empty(n)
    work = np.empty(n)
    ones = np.ones(n)
    dvec = np.full(n, dcoef)

    theta_int = 0.0
    consumption = 0.0
    max_w_rise = -np.inf
    steps = 0
    scale = max(1.0, abs(t_target))
    mass_u = 0.0
    for i in range(n):
        mass_u += u[i]
    mass_u *= dx
    wmax = np.max(w)

    while t_target - t > 1e-12 * scale:
        if steps >= max_steps:
            return t, steps, theta_int, consumption, max_w_rise, MAX_STEPS
        gmax = 0.0
        for i in range(n):
            g[i] = gamma_at(mk, ma, mb, mc, knots, coefs, v[i])
            if g[i] > gmax:
                gmax = g[i]
            p[i] = g[i] * u[i]
            r[i] = u[i] * response_at(rk, rlam, rm, w[i])
        if auto_dt:
            dt = sigma * dx * dx / (2.0 * max(gmax, dcoef, 1.0))
        else:
            dt = dt_fixed
        remaining = t_target - t
        last = dt >= remaining - 1e-12 * scale
        if last:
            dt = remaining

        _lap(p, inv_dx2, lp)
        _lap(v, inv_dx2, lv)
        _lap(w, inv_dx2, lw)
        step_cons = 0.0
        for i in range(n):
            step_cons += r[i]
        consumption += dt * step_cons * dx

        if not imex:
            for i in range(n):
                du = lp[i] + alpha * r[i] - theta * u[i]
                dv = dcoef * lv[i] + u[i] - v[i]
                w[i] += dt * (lw[i] - r[i])
                v[i] += dt * dv
                u[i] += dt * du
        else:
            # increment form keeps rounding proportional to the update size
            for i in range(n):
                rhs[i] = dt * (lv[i] * dcoef + u[i] - v[i])
            _implicit_matrix(dvec, dt, inv_dx2, dt, sub, diag, sup)
            if not thomas(sub, diag, sup, rhs, delta, work):
                return t, steps, theta_int, consumption, max_w_rise, SINGULAR
            for i in range(n):
                v[i] += delta[i]
            for i in range(n):
                rhs[i] = dt * (lw[i] - r[i])
            _implicit_matrix(ones, dt, inv_dx2, 0.0, sub, diag, sup)
            if not thomas(sub, diag, sup, rhs, delta, work):
                return t, steps, theta_int, consumption, max_w_rise, SINGULAR
            for i in range(n):
                w[i] += delta[i]
            for i in range(n):
                rhs[i] = dt * (lp[i] + alpha * r[i] - theta * u[i])
            _implicit_matrix(g, dt, inv_dx2, 0.0, sub, diag, sup)
            if not thomas(sub, diag, sup, rhs, delta, work):
                return t, steps, theta_int, consumption, max_w_rise, SINGULAR
            for i in range(n):
                u[i] += delta[i]

        t = t_target if last else t + dt
        steps += 1
        new_mass = 0.0
        lo = np.inf
        finite = True
        for i in range(n):
            new_mass += u[i]
            lo = min(lo, u[i], v[i], w[i])
            if not (math.isfinite(u[i]) and math.isfinite(v[i]) and math.isfinite(w[i])):
                finite = False
        new_mass *= dx
        theta_int += theta * dt * 0.5 * (mass_u + new_mass)
        mass_u = new_mass
        new_wmax = np.max(w)
        if new_wmax - wmax > max_w_rise:
            max_w_rise = new_wmax - wmax
        wmax = new_wmax
        if not finite:
            return t, steps, theta_int, consumption, max_w_rise, NONFINITE
        if lo < -eps_neg:
            return t, steps, theta_int, consumption, max_w_rise, NEGATIVE
    return t, steps, theta_int, consumption, max_w_rise, OK

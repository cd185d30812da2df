"""Pure-Python versions of the compiled kernels in ``_kernels.pyx``.

Same signatures and return conventions; used when the extension is not built.
"""
import math

import numpy as np


def _rk4(x, y, z, s, r, b, h):
    hh = 0.5 * h
    k1x = s * (y - x)
    k1y = x * (r - z) - y
    k1z = x * y - b * z
    ax, ay, az = x + hh * k1x, y + hh * k1y, z + hh * k1z
    k2x = s * (ay - ax)
    k2y = ax * (r - az) - ay
    k2z = ax * ay - b * az
    ax, ay, az = x + hh * k2x, y + hh * k2y, z + hh * k2z
    k3x = s * (ay - ax)
    k3y = ax * (r - az) - ay
    k3z = ax * ay - b * az
    ax, ay, az = x + h * k3x, y + h * k3y, z + h * k3z
    k4x = s * (ay - ax)
    k4y = ax * (r - az) - ay
    k4z = ax * ay - b * az
    return (
        x + h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x),
        y + h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y),
        z + h / 6.0 * (k1z + 2.0 * k2z + 2.0 * k3z + k4z),
    )


def _finite(x, y, z):
    return math.isfinite(x) and math.isfinite(y) and math.isfinite(z)


def lorenz_rk4(state0, sigma, rho, beta, h, n_transient, stride, n_out):
    x, y, z = (float(v) for v in state0)
    out = np.empty((n_out, 3))
    step = 0
    for _ in range(n_transient):
        x, y, z = _rk4(x, y, z, sigma, rho, beta, h)
        step += 1
        if not _finite(x, y, z):
            return out, step
    for i in range(n_out):
        if i > 0:
            for _ in range(stride):
                x, y, z = _rk4(x, y, z, sigma, rho, beta, h)
                step += 1
            if not _finite(x, y, z):
                return out, step
        out[i, 0] = x
        out[i, 1] = y
        out[i, 2] = z
    return out, -1


def lorenz_lyapunov(state0, sigma, rho, beta, h, n_transient, steps_per_renorm,
                    n_renorm, d0):
    ax, ay, az = (float(v) for v in state0)
    step = 0
    total = 0.0
    for _ in range(n_transient):
        ax, ay, az = _rk4(ax, ay, az, sigma, rho, beta, h)
        step += 1
    if not _finite(ax, ay, az):
        return total, step
    bx, by, bz = ax + d0, ay, az
    for _ in range(n_renorm):
        for _ in range(steps_per_renorm):
            ax, ay, az = _rk4(ax, ay, az, sigma, rho, beta, h)
            bx, by, bz = _rk4(bx, by, bz, sigma, rho, beta, h)
            step += 1
        if not (_finite(ax, ay, az) and _finite(bx, by, bz)):
            return total, step
        d = math.sqrt((bx - ax) ** 2 + (by - ay) ** 2 + (bz - az) ** 2)
        total += math.log(d / d0)
        scale = d0 / d
        bx = ax + (bx - ax) * scale
        by = ay + (by - ay) * scale
        bz = az + (bz - az) * scale
    return total, -1


def _profile(t, y, lam, x0_fixed, fit_x0, ybar):
    e = np.exp(-lam * t)
    ebar = e.mean()
    de = e - ebar
    see = 0.0
    if fit_x0:
        see = float(de @ de)
        x0 = float(de @ (y - ybar)) / see if see > 0.0 else 0.0
    else:
        x0 = x0_fixed
    mu = ybar - x0 * ebar
    r = x0 * e + mu - y
    v = -x0 * lam * t * e
    n = t.size
    sv = float(v.sum())
    curv = float(v @ v) - sv * sv / n
    if fit_x0 and see > 0.0:
        beta = float(v @ de) / see
        curv -= beta * beta * see
    return float(r @ r), x0, mu, float(v @ r), max(curv, 0.0)


def decay_profile(t, y, u, x0_fixed, fit_x0):
    t = np.asarray(t, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    rss, x0, mu, _, _ = _profile(t, y, math.exp(u), x0_fixed, fit_x0, float(y.mean()))
    return rss, x0, mu


def decay_lm(t, y, u, x0_fixed, fit_x0, max_iter, rtol, u_min, u_max):
    t = np.asarray(t, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    ybar = float(y.mean())
    u = min(max(float(u), u_min), u_max)
    damp = 1e-3
    rss, x0, mu, grad, curv = _profile(t, y, math.exp(u), x0_fixed, fit_x0, ybar)
    converged = False
    it = 0
    while it < max_iter:
        it += 1
        if curv <= 0.0 or grad == 0.0:
            converged = True
            break
        while True:
            un = min(max(u - grad / ((1.0 + damp) * curv), u_min), u_max)
            rss_new, x0n, mun, gn, cn = _profile(t, y, math.exp(un), x0_fixed, fit_x0, ybar)
            if math.isfinite(rss_new) and rss_new <= rss:
                break
            damp *= 10.0
            if damp > 1e16:
                break
        if damp > 1e16:
            converged = True
            break
        u, x0, mu, grad, curv = un, x0n, mun, gn, cn
        if rss - rss_new <= rtol * rss:
            rss = rss_new
            converged = True
            break
        rss = rss_new
        damp = max(damp / 10.0, 1e-12)
    return x0, u, mu, rss, it, converged

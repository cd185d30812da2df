# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: Lorenz RK4, Benettin Lyapunov estimate, decay fit.

Signatures and return conventions mirror ``icdyn._fallback`` exactly.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, sqrt, isfinite

cnp.import_array()


cdef inline void _deriv(double x, double y, double z,
                        double s, double r, double b,
                        double* dx, double* dy, double* dz) noexcept nogil:
    dx[0] = s * (y - x)
    dy[0] = x * (r - z) - y
    dz[0] = x * y - b * z


cdef inline void _rk4(double* st, double s, double r, double b, double h) noexcept nogil:
    cdef double k1x, k1y, k1z, k2x, k2y, k2z, k3x, k3y, k3z, k4x, k4y, k4z
    cdef double x = st[0], y = st[1], z = st[2]
    cdef double hh = 0.5 * h
    _deriv(x, y, z, s, r, b, &k1x, &k1y, &k1z)
    _deriv(x + hh * k1x, y + hh * k1y, z + hh * k1z, s, r, b, &k2x, &k2y, &k2z)
    _deriv(x + hh * k2x, y + hh * k2y, z + hh * k2z, s, r, b, &k3x, &k3y, &k3z)
    _deriv(x + h * k3x, y + h * k3y, z + h * k3z, s, r, b, &k4x, &k4y, &k4z)
    st[0] = x + h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
    st[1] = y + h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
    st[2] = z + h / 6.0 * (k1z + 2.0 * k2z + 2.0 * k3z + k4z)


cdef inline bint _finite3(double* st) noexcept nogil:
    return isfinite(st[0]) and isfinite(st[1]) and isfinite(st[2])


def lorenz_rk4(state0, double sigma, double rho, double beta, double h,
               Py_ssize_t n_transient, Py_ssize_t stride, Py_ssize_t n_out):
    """Integrate, discard ``n_transient`` steps, then record every ``stride`` steps.

    Returns ``(out, status)``; ``status`` is -1 on success, otherwise the step
    index at which the state became non-finite.
    """
    cdef double st[3]
    st[0] = state0[0]; st[1] = state0[1]; st[2] = state0[2]
    out = np.empty((n_out, 3), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef Py_ssize_t i, j, step = 0
    with nogil:
        for i in range(n_transient):
            _rk4(st, sigma, rho, beta, h)
            step += 1
            if not _finite3(st):
                with gil:
                    return out, step
        for i in range(n_out):
            if i > 0:
                for j in range(stride):
                    _rk4(st, sigma, rho, beta, h)
                    step += 1
                if not _finite3(st):
                    with gil:
                        return out, step
            o[i, 0] = st[0]; o[i, 1] = st[1]; o[i, 2] = st[2]
    return out, -1


def lorenz_lyapunov(state0, double sigma, double rho, double beta, double h,
                    Py_ssize_t n_transient, Py_ssize_t steps_per_renorm,
                    Py_ssize_t n_renorm, double d0):
    """Two-trajectory (Benettin) estimate; returns ``(sum of log(d/d0), status)``."""
    cdef double a[3]
    cdef double b[3]
    a[0] = state0[0]; a[1] = state0[1]; a[2] = state0[2]
    cdef Py_ssize_t i, j, step = 0
    cdef double d, scale, total = 0.0
    with nogil:
        for i in range(n_transient):
            _rk4(a, sigma, rho, beta, h)
            step += 1
        if not _finite3(a):
            with gil:
                return total, step
        b[0] = a[0] + d0; b[1] = a[1]; b[2] = a[2]
        for i in range(n_renorm):
            for j in range(steps_per_renorm):
                _rk4(a, sigma, rho, beta, h)
                _rk4(b, sigma, rho, beta, h)
                step += 1
            if not (_finite3(a) and _finite3(b)):
                with gil:
                    return total, step
            d = sqrt((b[0] - a[0]) ** 2 + (b[1] - a[1]) ** 2 + (b[2] - a[2]) ** 2)
            total += log(d / d0)
            scale = d0 / d
            b[0] = a[0] + (b[0] - a[0]) * scale
            b[1] = a[1] + (b[1] - a[1]) * scale
            b[2] = a[2] + (b[2] - a[2]) * scale
    return total, -1


cdef double _profile(const double[::1] t, const double[::1] y, double[::1] e,
                     double lam, double x0_fixed, bint fit_x0, double ybar,
                     double* x0, double* mu, double* grad, double* curv) noexcept nogil:
    # Linear parameters solved exactly at this rate; returns the RSS and the
    # projected (Kaufman) gradient and curvature with respect to u = log(lam).
    cdef Py_ssize_t i, n = t.shape[0]
    cdef double ebar = 0.0, see = 0.0, sey = 0.0, de, r, v
    cdef double rss = 0.0, vr = 0.0, sv = 0.0, svv = 0.0, sve = 0.0, beta
    for i in range(n):
        e[i] = exp(-lam * t[i])
        ebar += e[i]
    ebar /= n
    if fit_x0:
        for i in range(n):
            de = e[i] - ebar
            see += de * de
            sey += de * (y[i] - ybar)
        x0[0] = sey / see if see > 0.0 else 0.0
    else:
        x0[0] = x0_fixed
    mu[0] = ybar - x0[0] * ebar
    for i in range(n):
        r = x0[0] * e[i] + mu[0] - y[i]
        rss += r * r
        v = -x0[0] * lam * t[i] * e[i]
        vr += v * r
        sv += v
        svv += v * v
        if fit_x0:
            sve += v * (e[i] - ebar)
    grad[0] = vr
    curv[0] = svv - sv * sv / n
    if fit_x0 and see > 0.0:
        beta = sve / see
        curv[0] -= beta * beta * see
    if curv[0] < 0.0:
        curv[0] = 0.0
    return rss


def decay_profile(const double[::1] t, const double[::1] y, double u,
                  double x0_fixed, bint fit_x0):
    """RSS with ``x0`` (unless fixed) and ``mu`` solved exactly at ``lam = exp(u)``.

    Returns ``(rss, x0, mu)``.
    """
    cdef Py_ssize_t n = t.shape[0]
    e_buf = np.empty(n, dtype=np.float64)
    cdef double[::1] e = e_buf
    cdef double x0, mu, grad, curv, ybar = 0.0, rss
    cdef Py_ssize_t i
    for i in range(n):
        ybar += y[i]
    ybar /= n
    rss = _profile(t, y, e, exp(u), x0_fixed, fit_x0, ybar, &x0, &mu, &grad, &curv)
    return rss, x0, mu


def decay_lm(const double[::1] t, const double[::1] y, double u, double x0_fixed,
             bint fit_x0, int max_iter, double rtol, double u_min, double u_max):
    """Damped Gauss-Newton on ``u = log(lam)`` with linear parameters projected out.

    Returns ``(x0, u, mu, rss, iterations, converged)``.
    """
    cdef Py_ssize_t i, n = t.shape[0]
    e_buf = np.empty(n, dtype=np.float64)
    cdef double[::1] e = e_buf
    cdef double ybar = 0.0, x0, mu, grad, curv, rss
    cdef double x0n, mun, gn, cn, rss_new, un, damp = 1e-3
    cdef int it = 0
    cdef bint converged = False
    for i in range(n):
        ybar += y[i]
    ybar /= n
    if u < u_min:
        u = u_min
    elif u > u_max:
        u = u_max
    with nogil:
        rss = _profile(t, y, e, exp(u), x0_fixed, fit_x0, ybar, &x0, &mu, &grad, &curv)
        while it < max_iter:
            it += 1
            if curv <= 0.0 or grad == 0.0:
                converged = True
                break
            while True:
                un = u - grad / ((1.0 + damp) * curv)
                if un < u_min:
                    un = u_min
                elif un > u_max:
                    un = u_max
                rss_new = _profile(t, y, e, exp(un), x0_fixed, fit_x0, ybar,
                                   &x0n, &mun, &gn, &cn)
                if isfinite(rss_new) and rss_new <= rss:
                    break
                damp *= 10.0
                if damp > 1e16:
                    break
            if damp > 1e16:
                converged = True
                break
            u = un; x0 = x0n; mu = mun; grad = gn; curv = cn
            if rss - rss_new <= rtol * rss:
                rss = rss_new
                converged = True
                break
            rss = rss_new
            damp = damp / 10.0
            if damp < 1e-12:
                damp = 1e-12
    return x0, u, mu, rss, it, converged

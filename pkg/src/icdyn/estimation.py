"""Maximum-likelihood fits under i.i.d. Gaussian observation noise.

The noise variance is always profiled out (``sigma2 = RSS / M``), so every fit
reduces to least squares and the negative log-likelihood at the optimum is
``M/2 * ln(2*pi*sigma2) + M/2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from . import _backend
from .errors import DegenerateVariance, GridMismatch, NonConvergence
from .signal_models import TimeSeries

# chaos model: Lorenz coefficients (sigma, rho, beta) plus noise (mu, sigma)
CHAOS_K = 5


@dataclass(frozen=True)
class FitResult:
    model: str
    params: dict = field(compare=False)
    k: int
    rss: float
    M: int
    converged: bool = True
    iterations: int = 0
    var_floor: float = 0.0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("parameter count must be >= 1")
        if self.rss < 0:
            raise ValueError("RSS must be >= 0")

    @property
    def sigma2(self) -> float:
        """MLE noise variance ``RSS / M`` (never the ``M - 1`` form)."""
        return max(self.rss / self.M, self.var_floor)

    @property
    def nll(self) -> float:
        s2 = self.sigma2
        return 0.5 * self.M * math.log(2 * math.pi * s2) + self.rss / (2 * s2)


def _check_rss(rss: float, var_floor: float) -> None:
    if rss <= 0.0 and var_floor <= 0.0:
        raise DegenerateVariance("zero residual sum of squares")


def _grid_scales(t: np.ndarray) -> tuple[float, float]:
    """Sampling frequency and observation window of a (possibly tiled) grid."""
    u = np.unique(t)
    if u.size < 2:
        raise ValueError("need at least two distinct sample times")
    dt = float(np.min(np.diff(u)))
    return 1.0 / dt, u.size * dt


def fit_noise(ts: TimeSeries, var_floor: float = 0.0) -> FitResult:
    """Constant mean plus noise: parameters ``{mu, sigma}``."""
    y = ts.values
    if y.size < 2:
        raise ValueError("fit_noise needs M >= 2")
    mu = float(np.mean(y))
    r = y - mu
    rss = float(r @ r)
    _check_rss(rss, var_floor)
    return FitResult("noise", {"mu": mu}, 2, rss, y.size, var_floor=var_floor)


def fit_decay(ts: TimeSeries, x0_known: float | None = None, lam_start: float | None = None,
              n_starts: int = 20, max_iter: int = 200, rtol: float = 1e-10,
              var_floor: float = 0.0, strict: bool = False) -> FitResult:
    """Fit ``x0 * exp(-lam * t) + mu``.

    Without ``lam_start`` the decay rate is searched from ``n_starts`` values
    log-spaced over ``[0.01 / t_max, 100 f]``; with it, a single local fit is
    started there. At every trial rate ``x0`` and ``mu`` are solved exactly by
    linear least squares, and a damped Gauss-Newton iteration moves
    ``log(lam)``; it stops when the relative RSS change drops below ``rtol``.
    Supplying ``x0_known`` removes ``x0`` from the fit (``k = 3`` instead of 4).
    """
    t, y = ts.times, ts.values
    fit_x0 = x0_known is None
    k = 4 if fit_x0 else 3
    if y.size < k + 1:
        raise ValueError(f"fit_decay needs M >= {k + 1}")
    f, t_max = _grid_scales(t)
    if lam_start is None:
        starts = np.geomspace(0.01 / t_max, 100.0 * f, n_starts)
    else:
        starts = np.array([float(lam_start)])
    u_min = math.log(1e-4 / t_max)
    u_max = math.log(1e6 * f)
    t = np.ascontiguousarray(t)
    y = np.ascontiguousarray(y)
    x0_fixed = 0.0 if fit_x0 else float(x0_known)

    best = None
    any_converged = False
    for lam0 in starts:
        x0, u, mu, rss, its, conv = _backend.decay_lm(
            t, y, math.log(lam0), x0_fixed, fit_x0, max_iter, rtol, u_min, u_max)
        any_converged |= bool(conv)
        cand = (float(rss), math.exp(u), float(x0), float(mu), int(its), bool(conv))
        if best is None or cand[:2] < best[:2]:
            best = cand
    rss, lam, x0, mu, its, conv = best
    if strict and not any_converged:
        raise NonConvergence(f"no decay start converged within {max_iter} iterations")
    _check_rss(rss, var_floor)
    return FitResult("decay", {"x0": x0, "lam": lam, "mu": mu}, k, rss, y.size,
                     converged=any_converged, iterations=its, var_floor=var_floor)


def _sho_basis(t, omega, phase):
    if phase is None:
        return np.column_stack([np.cos(omega * t), np.sin(omega * t), np.ones_like(t)])
    return np.column_stack([np.cos(omega * t + phase), np.ones_like(t)])


def _sho_profile_rss(t, y, omega, phase):
    # coefficients from the normal equations, RSS from explicit residuals
    B = _sho_basis(t, omega, phase)
    c, *_ = np.linalg.lstsq(B.T @ B, B.T @ y, rcond=None)
    r = y - B @ c
    return float(r @ r)


def _periodogram_peaks(y, f, n_peaks, pad=4):
    yc = y - y.mean()
    n = pad * y.size
    power = np.abs(np.fft.rfft(yc, n)) ** 2
    omegas = 2 * np.pi * np.fft.rfftfreq(n, d=1.0 / f)
    p = power[1:]
    interior = np.flatnonzero((p[1:-1] >= p[:-2]) & (p[1:-1] >= p[2:])) + 1
    idx = interior[np.argsort(p[interior])[::-1][:n_peaks]] + 1
    return omegas[idx]


def fit_sho(ts: TimeSeries, phase: float | None = None, omega_start: float | None = None,
            n_peaks: int = 5, n_grid: int = 20, var_floor: float = 0.0,
            strict: bool = False) -> FitResult:
    """Fit ``A cos(omega t + phi) + mu``.

    With ``phase=None`` the phase is fitted (``k = 5``: A, omega, phi, mu,
    sigma); a given ``phase`` is held fixed (``k = 4``). For each trial
    frequency the amplitude and offset are solved exactly by linear least
    squares, so only ``omega`` is searched nonlinearly.

    Without ``omega_start`` the candidates are the ``n_peaks`` largest
    periodogram peaks plus ``n_grid`` log-spaced values over
    ``[2 pi / t_max, pi f]``; the best is refined within half a Fourier bin.
    With ``omega_start`` only that half-bin neighbourhood is searched.
    """
    t, y = ts.times, ts.values
    k = 5 if phase is None else 4
    if y.size < 8:
        raise ValueError("fit_sho needs M >= 8")
    f, t_max = _grid_scales(t)
    half_bin = math.pi / t_max
    nyquist = math.pi * f

    if omega_start is None:
        cands = np.concatenate([
            _periodogram_peaks(y, f, n_peaks),
            np.geomspace(2 * math.pi / t_max, nyquist, n_grid),
        ])
        scored = sorted((_sho_profile_rss(t, y, w, phase), w) for w in cands)
        center = scored[0][1]
    else:
        center = float(omega_start)

    lo = max(center - half_bin, 1e-3 * half_bin)
    hi = min(center + half_bin, nyquist) if omega_start is None else center + half_bin
    res = minimize_scalar(lambda w: _sho_profile_rss(t, y, w, phase), bounds=(lo, hi),
                          method="bounded", options={"xatol": 1e-11 * max(1.0, center)})
    omega = float(res.x)
    converged = bool(res.success)
    if strict and not converged:
        raise NonConvergence("frequency refinement did not converge")

    B = _sho_basis(t, omega, phase)
    c, *_ = np.linalg.lstsq(B, y, rcond=None)
    r = y - B @ c
    rss = float(r @ r)
    _check_rss(rss, var_floor)
    if phase is None:
        params = {"A": float(math.hypot(c[0], c[1])), "omega": omega,
                  "phi": float(math.atan2(-c[1], c[0]) % (2 * math.pi)), "mu": float(c[2])}
    else:
        params = {"A": float(c[0]), "omega": omega, "phi": float(phase), "mu": float(c[1])}
    return FitResult("sho", params, k, rss, y.size, converged=converged,
                     iterations=int(getattr(res, "nfev", 0)), var_floor=var_floor)


def fit_known_chaos(ts: TimeSeries, clean: TimeSeries, k: int = CHAOS_K,
                    var_floor: float = 0.0) -> FitResult:
    """Known clean trajectory plus noise with fitted mean ``mu``."""
    if ts.times.shape != clean.times.shape or not np.array_equal(ts.times, clean.times):
        raise GridMismatch("observed and clean series are on different grids")
    r = ts.values - clean.values
    mu = float(np.mean(r))
    r = r - mu
    rss = float(r @ r)
    _check_rss(rss, var_floor)
    return FitResult("chaos", {"mu": mu}, k, rss, r.size, var_floor=var_floor)

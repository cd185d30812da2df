"""Closed-form crossover predictors and the exact finite-sample quantities behind them.

Every predictor returns a :class:`CrossoverPrediction` tagged with the formula
variant that produced it:

``main-text`` / ``appendix``
    Two published forms of the upper decay crossover that differ in the power
    of ``x0`` (``x0**2`` versus ``x0``). ``appendix`` is the default.
``exact-numeric``
    Root of the linearized AIC balance evaluated with exact (non-asymptotic)
    signal variances, found by log-grid bracketing and bisection.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import NoRoot, NoWindow

VARIANTS = ("main-text", "appendix", "exact-numeric")
ROOT_GRID = 200


@dataclass(frozen=True)
class CrossoverPrediction:
    kind: str
    value: float
    variant: str
    inputs: dict = field(default_factory=dict, compare=False)
    flags: tuple = ()

    def __post_init__(self):
        if not (math.isfinite(self.value) and self.value >= 0):
            raise ValueError(f"{self.kind}: crossover value must be finite and >= 0, got {self.value}")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")


DIMENSION_CASES = ("fixed-M", "fixed-MN", "fixed-M-over-N")


@dataclass(frozen=True)
class DimensionScenario:
    """How the per-dimension sample count ``M`` follows the dimension ``N``."""

    case: str
    C: float
    dt: float
    lam: float
    x0: float
    sigma: float
    N_range: tuple[float, float] = (1, 1000)

    def __post_init__(self):
        if self.case not in DIMENSION_CASES:
            raise ValueError(f"case must be one of {DIMENSION_CASES}, got {self.case!r}")
        if not self.C > 0:
            raise ValueError("constraint constant C must be positive")

    def M_for(self, N: int) -> int:
        if self.case == "fixed-M":
            return int(round(self.C))
        if self.case == "fixed-MN":
            return max(2, int(round(self.C / N)))
        return max(2, int(round(self.C * N)))


# --- root finding -----------------------------------------------------------

def _bisect(fn, a, b, fa, rtol=1e-13, max_iter=200):
    """Bisection in log space on a sign-changing bracket ``[a, b]``."""
    la, lb = math.log(a), math.log(b)
    for _ in range(max_iter):
        lm = 0.5 * (la + lb)
        fm = fn(math.exp(lm))
        if fm == 0:
            return math.exp(lm)
        if (fm > 0) == (fa > 0):
            la, fa = lm, fm
        else:
            lb = lm
        if lb - la < rtol:
            break
    return math.exp(0.5 * (la + lb))


def bracket_roots(fn, lo: float, hi: float, n: int = ROOT_GRID) -> list[float]:
    """All sign changes of ``fn`` on a log grid over ``[lo, hi]``, bisected."""
    xs = np.geomspace(lo, hi, n)
    vals = [fn(float(x)) for x in xs]
    roots = []
    for i in range(n - 1):
        a, b, fa, fb = float(xs[i]), float(xs[i + 1]), vals[i], vals[i + 1]
        if fa == 0:
            roots.append(a)
        elif fa * fb < 0:
            roots.append(_bisect(fn, a, b, fa))
    if vals[-1] == 0:
        roots.append(float(xs[-1]))
    return roots


# --- signal variances -------------------------------------------------------

def delta_rss_decay(x0: float, lam: float, f: float, M: int, method: str = "sum") -> float:
    """Signal power ``M x0^2 Var_j[exp(-j lam / f)]`` over ``j = 0..M-1``.

    ``method="sum"`` sums directly (two-pass variance); ``"closed"`` uses the
    geometric-series moments and loses relative accuracy when ``lam M / f`` is
    small.
    """
    if M < 2 or not (lam > 0 and f > 0):
        raise ValueError("need lam, f > 0 and M >= 2")
    a = lam / f
    if method == "sum":
        v = np.exp(-a * np.arange(M))
        var = float(np.mean((v - v.mean()) ** 2))
    elif method == "closed":
        s1 = math.expm1(-a * M) / math.expm1(-a)
        s2 = math.expm1(-2 * a * M) / math.expm1(-2 * a)
        var = s2 / M - (s1 / M) ** 2
    else:
        raise ValueError(f"unknown method {method!r}")
    return M * x0**2 * var


def _g_series_coefficients(n_max: int = 16) -> list[Fraction]:
    # g = A2 - A1^2 with A1 = sum (-a)^n/(n+1)!, A2 = sum (-2a)^n/(n+1)!
    fact = [math.factorial(i) for i in range(n_max + 2)]
    a1 = [Fraction((-1) ** n, fact[n + 1]) for n in range(n_max + 1)]
    coeffs = []
    for n in range(n_max + 1):
        a2 = Fraction((-2) ** n, fact[n + 1])
        sq = sum(a1[i] * a1[n - i] for i in range(n + 1))
        coeffs.append(a2 - sq)
    return coeffs


_G_COEFFS = [float(c) for c in _g_series_coefficients()]
G_SERIES_CUTOFF = 1e-4


def g_alpha_series(alpha: float) -> float:
    """Power series of :func:`g_alpha` about zero (leading terms a^2/12 - a^3/12)."""
    s = 0.0
    for c in reversed(_G_COEFFS):
        s = s * alpha + c
    return s


def _x_cosh_minus_sinh(x: float) -> float:
    # x cosh x - sinh x = sum_{n>=1} 2n x^(2n+1) / (2n+1)!, all terms positive
    if x > 1.0:
        return x * math.cosh(x) - math.sinh(x)
    term, total, n = x, 0.0, 0
    x2 = x * x
    while True:
        n += 1
        term *= x2 / ((2 * n) * (2 * n + 1))
        add = 2 * n * term
        total += add
        if add < 1e-18 * total:
            return total


def g_alpha_closed(alpha: float) -> float:
    """``(1 - e^{-2a}) / (2a) - ((1 - e^{-a}) / a)^2`` evaluated without cancellation.

    Factored as ``(1 - e^{-a}) / a^2 * [a (1 + e^{-a}) / 2 - (1 - e^{-a})]``; the
    bracket equals ``2 e^{-a/2} (x cosh x - sinh x)`` with ``x = a / 2``.
    """
    d = -math.expm1(-alpha)
    if alpha <= 2.0:
        bracket = 2.0 * math.exp(-0.5 * alpha) * _x_cosh_minus_sinh(0.5 * alpha)
    else:
        bracket = 0.5 * alpha * (2.0 - d) - d
    return d * bracket / alpha**2


def g_alpha(alpha: float) -> float:
    """Variance of ``exp(-alpha u)`` for ``u`` uniform on ``[0, 1]``.

    The signal variance of a decay observed over ``alpha = lam * t_max`` decay
    times is ``x0**2 * g_alpha(alpha)``; ``g ~ alpha**2/12`` for small and
    ``1/(2 alpha)`` for large ``alpha``.
    """
    if alpha == 0 or math.isinf(alpha):
        return 0.0
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if alpha <= G_SERIES_CUTOFF:
        return g_alpha_series(alpha)
    return g_alpha_closed(alpha)


# --- sampling-frequency crossovers -------------------------------------------

def _check_positive(**kw):
    for name, v in kw.items():
        if not (v > 0 and math.isfinite(v)):
            raise ValueError(f"{name} must be positive and finite, got {v}")


def _decay_balance(x0, lam, sigma, M):
    return lambda f: 4.0 - delta_rss_decay(x0, lam, f, M) / sigma**2


def _decay_freq_roots(x0, lam, sigma, M):
    hi = 1e4 * max(fc2(M, lam, x0, sigma).value, lam * M)
    roots = bracket_roots(_decay_balance(x0, lam, sigma, M), 1e-4 * lam, hi)
    if not roots:
        raise NoWindow("decay model never preferred under the linearized AIC balance")
    return roots


def fc1(lam: float, sigma: float, x0: float, variant: str = "appendix",
        M: int | None = None) -> CrossoverPrediction:
    """Lower decay crossover frequency ``8 lam sigma^2 / x0^2``.

    ``variant="exact-numeric"`` needs ``M`` and returns the lower root of
    ``4 - delta_rss_decay(f) / sigma^2``.
    """
    inputs = {"lam": lam, "sigma": sigma, "x0": x0}
    if variant == "exact-numeric":
        if M is None:
            raise ValueError("exact-numeric lower crossover needs M")
        _check_positive(lam=lam, sigma=sigma, x0=abs(x0))
        value = _decay_freq_roots(x0, lam, sigma, M)[0]
        inputs["M"] = M
    else:
        _check_positive(lam=lam, x0=abs(x0))
        if sigma < 0:
            raise ValueError("sigma must be >= 0")
        value = 8 * lam * sigma**2 / x0**2
    return CrossoverPrediction("lower-frequency", value, variant, inputs)


def fc2(M: int, lam: float, x0: float, sigma: float,
        variant: str = "appendix") -> CrossoverPrediction:
    """Upper decay crossover frequency.

    ``appendix``: ``M^{3/2} lam x0 / (4 sqrt(3) sigma)``; ``main-text``: the
    same with ``x0**2``; ``exact-numeric``: the upper root of
    ``4 - delta_rss_decay(f) / sigma^2``.
    """
    _check_positive(M=M, lam=lam, x0=abs(x0), sigma=sigma)
    inputs = {"M": M, "lam": lam, "x0": x0, "sigma": sigma}
    if variant == "appendix":
        value = M**1.5 * lam * abs(x0) / (4 * math.sqrt(3) * sigma)
    elif variant == "main-text":
        value = M**1.5 * lam * x0**2 / (4 * math.sqrt(3) * sigma)
    elif variant == "exact-numeric":
        value = _decay_freq_roots(x0, lam, sigma, M)[-1]
    else:
        raise ValueError(f"unknown variant {variant!r}")
    return CrossoverPrediction("upper-frequency", value, variant, inputs)


def mc_critical(sigma: float, f: float, lam: float, x0: float,
                variant: str = "appendix") -> CrossoverPrediction:
    """Critical sample count at fixed ``f``: the inverse of :func:`fc2` in ``M``."""
    _check_positive(sigma=sigma, f=f, lam=lam, x0=abs(x0))
    power = {"appendix": 1, "main-text": 2}.get(variant)
    if power is None:
        raise ValueError(f"mc_critical supports appendix/main-text, got {variant!r}")
    value = (4 * math.sqrt(3) * sigma * f / (lam * abs(x0) ** power)) ** (2 / 3)
    return CrossoverPrediction("critical-M", value, variant,
                               {"sigma": sigma, "f": f, "lam": lam, "x0": x0})


SHO_MIN_SAMPLES = 10


def sho_noise_crit(f: float, t_max: float) -> CrossoverPrediction:
    """Critical noise-to-amplitude ratio ``sqrt(t_max f / 8)`` at fixed window."""
    _check_positive(f=f, t_max=t_max)
    flags = ("out-of-regime",) if f * t_max < SHO_MIN_SAMPLES else ()
    return CrossoverPrediction("sho-noise", math.sqrt(t_max * f / 8), "appendix",
                               {"f": f, "t_max": t_max}, flags)


# --- dimension crossovers -----------------------------------------------------

def delta_aic_dimension(N: float, M: float, S: float, sigma: float) -> float:
    """``2 - N M ln(1 + S / sigma^2)`` for N independent decays with known x0."""
    return 2.0 - N * M * math.log1p(S / sigma**2)


def n_crit_case1(M: int, dt: float, lam: float, x0: float, sigma: float) -> CrossoverPrediction:
    """Critical dimension at fixed samples per dimension."""
    _check_positive(M=M, dt=dt, lam=lam, sigma=sigma)
    S = x0**2 * g_alpha(lam * M * dt)
    value = 2.0 / (M * math.log1p(S / sigma**2)) if S > 0 else math.inf
    if not math.isfinite(value):
        raise NoRoot("zero signal variance: decay never preferred")
    return CrossoverPrediction("dimension-case1", value, "appendix",
                               {"M": M, "dt": dt, "lam": lam, "x0": x0, "sigma": sigma})


def n_crit_case2(C: float, dt: float, lam: float, x0: float, sigma: float,
                 variant: str = "appendix") -> tuple[CrossoverPrediction, CrossoverPrediction]:
    """Lower and upper critical dimensions at fixed total data ``M N = C``."""
    _check_positive(C=C, dt=dt, lam=lam, sigma=sigma)
    inputs = {"C": C, "dt": dt, "lam": lam, "x0": x0, "sigma": sigma}
    if variant == "appendix":
        low = 2.0 / (C * math.log1p(x0**2 / (2 * lam * C * dt * sigma**2)))
        high = lam * C * dt * abs(x0) / (2 * math.sqrt(6) * sigma) * math.sqrt(C)
        if not low < high:
            raise NoWindow(f"asymptotic crossovers out of order (low={low:g}, high={high:g})")
    elif variant == "exact-numeric":
        def balance(N):
            return 2.0 - C * math.log1p(x0**2 * g_alpha(lam * C * dt / N) / sigma**2)
        roots = bracket_roots(balance, 1e-3, 1e8)
        if len(roots) < 2:
            raise NoWindow("no interval of N where the decay model is preferred")
        low, high = roots[0], roots[-1]
    else:
        raise ValueError(f"unknown variant {variant!r}")
    return (CrossoverPrediction("dimension-case2-low", low, variant, inputs),
            CrossoverPrediction("dimension-case2-high", high, variant, inputs))


def _case3_balance(C, dt, lam, x0, sigma, asymptotic):
    def S_of(N):
        alpha = lam * C * N * dt
        return x0**2 * (1 / (2 * alpha) if asymptotic else g_alpha(alpha))
    return (lambda N: 2.0 - C * N**2 * math.log1p(S_of(N) / sigma**2)), S_of


def n_crit_case3(C: float, dt: float, lam: float, x0: float, sigma: float,
                 variant: str = "exact-numeric", damping: float = 0.5,
                 rtol: float = 1e-10, max_iter: int = 500) -> CrossoverPrediction:
    """Critical dimension at fixed ``M / N = C``; the defining equation is implicit.

    ``exact-numeric`` uses the full signal-variance function, ``appendix`` its
    large-``alpha`` limit ``1 / (2 alpha)``. Solved by damped fixed-point
    iteration from ``N = 1``; bisection on ``[1e-3, 1e6]`` if that stalls.
    """
    _check_positive(C=C, dt=dt, lam=lam, sigma=sigma)
    if variant not in ("exact-numeric", "appendix"):
        raise ValueError(f"unknown variant {variant!r}")
    balance, S_of = _case3_balance(C, dt, lam, x0, sigma, variant == "appendix")
    inputs = {"C": C, "dt": dt, "lam": lam, "x0": x0, "sigma": sigma}

    N = 1.0
    value = None
    for _ in range(max_iter):
        ln_term = math.log1p(S_of(N) / sigma**2)
        if not ln_term > 0:
            break
        target = math.sqrt(2.0 / (C * ln_term))
        N_new = N + damping * (target - N)
        if abs(N_new - N) <= rtol * N_new:
            value = N_new
            break
        N = N_new
    if value is None:
        roots = bracket_roots(balance, 1e-3, 1e6)
        if not roots:
            raise NoRoot("no critical dimension in [1e-3, 1e6]")
        value = roots[0]
    return CrossoverPrediction("dimension-case3", value, variant, inputs)


def dimension_predictions(s: DimensionScenario) -> list[CrossoverPrediction]:
    args = (s.dt, s.lam, s.x0, s.sigma)
    if s.case == "fixed-M":
        return [n_crit_case1(int(round(s.C)), *args)]
    if s.case == "fixed-MN":
        out = list(n_crit_case2(s.C, *args, variant="appendix"))
        try:
            out += n_crit_case2(s.C, *args, variant="exact-numeric")
        except NoWindow:
            pass
        return out
    return [n_crit_case3(s.C, *args, variant=v) for v in ("exact-numeric", "appendix")]

"""Canned figure-reproduction runs with pass/fail checks.

Each preset returns a :class:`Report` holding the raw sweeps, the measured
quantities, crossover rows (empirical against theory) and one check per
acceptance target. The CLI serializes reports; the acceptance tests read the
measured values and apply their own tolerances.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import NoCrossing
from .montecarlo import (
    Scenario,
    SweepResult,
    find_crossover,
    fit_scaling_exponent,
    noise_tolerance_curve,
    snap_frequency,
    sweep,
)
from .signal_models import DecayParams, LorenzParams, NoiseParams, SHOParams, estimate_lyapunov
from .theory import fc1, fc2, n_crit_case1, n_crit_case2, n_crit_case3, sho_noise_crit

FIGURES = ("fig1", "fig2", "fig3", "chaos-exponent")

# published annotation of the fig1 upper crossover, reported next to the measurement
FIG1_ANNOTATED_FC2 = 2000.0
LYAPUNOV_REFERENCE = 0.906


@dataclass
class Check:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail}"


@dataclass
class CrossoverRow:
    kind: str
    empirical: float
    theory: float
    variant: str

    @property
    def relative_gap(self) -> float:
        return (self.empirical - self.theory) / self.theory


@dataclass
class Report:
    figure: str
    sweeps: dict = field(default_factory=dict)
    measured: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def _first_last(r: SweepResult, model: str) -> tuple[float, float]:
    c = find_crossover(r, model)
    return c[0], c[-1]


def _within_factor(x: float, ref: float, factor: float) -> bool:
    return ref / factor <= x <= ref * factor


def _in_band(x: float, lo: float, hi: float) -> bool:
    return lo <= x <= hi


def fig1(seed: int = 42, trials: int | None = None, workers: int = 1,
         variant: str = "appendix") -> Report:
    rep = Report("fig1")
    x0, lam, sigma, M = 1.0, 0.1, 2.5, 2000
    base = dict(policy="fixed-M", M=M, decay=DecayParams(x0, lam),
                noise=NoiseParams(0.0, sigma), x0_known=False, seed=seed)
    grid = tuple(np.geomspace(0.1, 1e5, 25))
    r = sweep(Scenario("decay", "f", grid, trials=trials or 200, **base), workers=workers)
    rep.sweeps["sweep"] = r
    # the regime-shape proportions are measured with the full trial count
    ends = (0.1, 50.0, 1e5)
    r_ends = sweep(Scenario("decay", "f", ends, trials=trials or 1000,
                            **{**base, "seed": seed + 1}), workers=workers)
    rep.sweeps["regimes"] = r_ends

    low_th = fc1(lam, sigma, x0).value
    up_exact = fc2(M, lam, x0, sigma, "exact-numeric").value
    up_sel = fc2(M, lam, x0, sigma, variant).value
    try:
        low, up = _first_last(r, "decay")
    except NoCrossing:
        low = up = math.nan
    noise = r_ends.column("noise")
    decay = r_ends.column("decay")
    rep.measured.update(lower=low, upper=up, noise_low_f=float(noise[0]),
                        decay_mid_f=float(decay[1]), noise_high_f=float(noise[2]),
                        fc1=low_th, fc2_exact=up_exact, fc2_selected=up_sel)
    rep.rows += [
        CrossoverRow("lower-frequency", low, low_th, "appendix"),
        CrossoverRow("upper-frequency", up, up_exact, "exact-numeric"),
        CrossoverRow("upper-frequency", up, up_sel, variant),
    ]
    rep.checks += [
        Check("fig1 lower crossover", _within_factor(low, low_th, 2.0),
              f"empirical {low:.4g} vs {low_th:.4g} (factor 2)"),
        Check("fig1 regime shape",
              noise[0] >= 0.85 and decay[1] >= 0.85 and noise[2] >= 0.85,
              f"noise@0.1={noise[0]:.3f} decay@50={decay[1]:.3f} noise@1e5={noise[2]:.3f} (>= 0.85)"),
        Check("fig1 upper crossover",
              _in_band(up, 300, 4000) and _within_factor(up, up_exact, 1.5),
              f"empirical {up:.4g} vs exact-numeric {up_exact:.4g} (factor 1.5, band [300, 4000]); "
              f"{variant} formula {up_sel:.4g}, annotated {FIG1_ANNOTATED_FC2:g}"),
    ]
    return rep


def sho_frequencies() -> np.ndarray:
    # log-spaced through 0.67 with no f = 1/n, where the samples alias to a constant
    return 0.67 * 2.4 ** np.arange(-2, 4)


def fig2(seed: int = 42, trials: int | None = None, workers: int = 1,
         variant: str = "appendix") -> Report:
    rep = Report("fig2")
    t_max = 1000.0
    s = Scenario("sho", "sigma_ratio", (1.0,), policy="fixed-t_max", f=1.0, t_max=t_max,
                 sho=SHOParams(1.0, 2 * math.pi, 0.0), trials=trials or 200, seed=seed)
    fs = sho_frequencies()
    curve = noise_tolerance_curve(s, fs, workers=workers)
    rep.measured["curve"] = curve
    ok = [c for c in curve if math.isfinite(c.critical_ratio)]
    try:
        fit = fit_scaling_exponent([c.f for c in ok], [c.critical_ratio for c in ok])
        alpha = fit.alpha
    except ValueError:
        alpha = math.nan
    at = next(c for c in curve if abs(c.f - 0.67) < 1e-9)
    th = sho_noise_crit(0.67, t_max).value
    rep.measured.update(alpha=alpha, ratio_067=at.critical_ratio, theory_067=th)
    for c in curve:
        rep.rows.append(CrossoverRow(f"sho-noise@f={c.f:.6g}", c.critical_ratio,
                                     sho_noise_crit(c.f, t_max).value, "appendix"))
    gap = abs(at.critical_ratio / th - 1)
    rep.checks += [
        Check("fig2 scaling exponent", _in_band(alpha, 0.45, 0.55),
              f"alpha {alpha:.4f} (band [0.45, 0.55])"),
        Check("fig2 critical ratio at f=0.67", gap <= 0.25,
              f"empirical {at.critical_ratio:.4g} vs {th:.4g} (gap {gap:.1%}, <= 25%)"),
    ]
    return rep


FIG3 = dict(x0=2.0, lam=1.0, mu=1.0, sigma=8.0, f=10.0)


def _dimension_grid(case: str, C: float) -> tuple:
    if case == "fixed-MN":
        return tuple(int(n) for n in np.unique(np.round(np.geomspace(1, C / 2, 30))))
    return tuple(range(1, 31))


def fig3(seed: int = 42, trials: int | None = None, workers: int = 1,
         variant: str = "appendix") -> Report:
    rep = Report("fig3")
    p = FIG3
    dt = 1.0 / p["f"]
    args = (dt, p["lam"], p["x0"], p["sigma"])
    for i, (case, C) in enumerate((("fixed-M", 100), ("fixed-MN", 1250), ("fixed-M-over-N", 10))):
        s = Scenario("dimension", "N", _dimension_grid(case, C), f=p["f"], case=case, C=C,
                     decay=DecayParams(p["x0"], p["lam"]), noise=NoiseParams(p["mu"], p["sigma"]),
                     x0_known=True, trials=trials or 500, seed=seed + i)
        r = sweep(s, workers=workers)
        rep.sweeps[case] = r
        try:
            cr = find_crossover(r, "decay")
        except NoCrossing:
            cr = []
        rep.measured[case] = cr
        if case == "fixed-M":
            th = n_crit_case1(C, *args).value
            n = cr[0] if cr else math.nan
            rep.rows.append(CrossoverRow("dimension-case1", n, th, "appendix"))
            rep.checks.append(Check("fig3 case 1", len(cr) == 1 and _in_band(n, 5, 11),
                                    f"crossings {_fmt(cr)}; theory {th:.4g} (band [5, 11])"))
        elif case == "fixed-MN":
            lo_th, hi_th = n_crit_case2(C, *args, variant="appendix")
            lo, hi = (cr[0], cr[-1]) if len(cr) >= 2 else (math.nan, math.nan)
            rep.rows += [CrossoverRow("dimension-case2-low", lo, lo_th.value, "appendix"),
                         CrossoverRow("dimension-case2-high", hi, hi_th.value, "appendix")]
            rep.checks.append(Check(
                "fig3 case 2", len(cr) == 2 and _in_band(lo, 4, 10) and _in_band(hi, 150, 330),
                f"crossings {_fmt(cr)}; theory {lo_th.value:.4g}, {hi_th.value:.4g} "
                f"(bands [4, 10], [150, 330])"))
        else:
            th = n_crit_case3(C, *args).value
            n = cr[0] if cr else math.nan
            rep.rows.append(CrossoverRow("dimension-case3", n, th, "exact-numeric"))
            rep.checks.append(Check("fig3 case 3", len(cr) == 1 and _in_band(n, 4, 12),
                                    f"crossings {_fmt(cr)}; theory {th:.4g} (band [4, 12])"))
    return rep


def chaos_frequencies(h: float = 1e-3) -> list[float]:
    return [snap_frequency(f, h) for f in np.geomspace(2, 200, 5)]


def chaos_exponent(seed: int = 42, trials: int | None = None, workers: int = 1,
                   variant: str = "appendix") -> Report:
    rep = Report("chaos-exponent")
    lp = LorenzParams()
    lyap = estimate_lyapunov(lp)
    s = Scenario("chaos", "sigma_ratio", (1.0,), policy="fixed-t_max", f=1.0, t_max=50.0,
                 lorenz=lp, trials=trials or 100, seed=seed)
    curve = noise_tolerance_curve(s, chaos_frequencies(lp.h), workers=workers)
    ok = [c for c in curve if math.isfinite(c.critical_ratio)]
    try:
        fit = fit_scaling_exponent([c.f for c in ok], [c.critical_ratio for c in ok])
        alpha = fit.alpha
        half = float(stats.t.ppf(0.975, len(ok) - 2) * fit.stderr)
    except ValueError:
        alpha = half = math.nan
    rep.measured.update(curve=curve, alpha=alpha, alpha_half_width=half, lyapunov=lyap)
    rep.checks += [
        Check("lyapunov estimate", abs(lyap - LYAPUNOV_REFERENCE) <= 0.05,
              f"{lyap:.4f} vs {LYAPUNOV_REFERENCE} (+/- 0.05)"),
        Check("chaos scaling exponent", _in_band(alpha, 0.41, 0.61),
              f"alpha {alpha:.4f} +/- {half:.3f} (95%); band [0.41, 0.61]"),
    ]
    return rep


def _fmt(xs) -> str:
    return "[" + ", ".join(f"{x:.4g}" for x in xs) + "]"


PRESETS = {"fig1": fig1, "fig2": fig2, "fig3": fig3, "chaos-exponent": chaos_exponent}


def run(figure: str, **kw) -> Report:
    if figure not in PRESETS:
        raise ValueError(f"figure must be one of {FIGURES}")
    return PRESETS[figure](**kw)

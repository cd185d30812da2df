"""Seeded Monte Carlo model-selection experiments.

Each trial draws its noise from its own Philox stream keyed by a 64-bit mix of
``(master seed, grid index, trial index, attempt)``, so a sweep gives the same
result whether trials run serially, in parallel, or in any order.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy import stats

from .criteria import compare
from .errors import DegenerateVariance, NoCrossing
from .estimation import CHAOS_K, fit_decay, fit_known_chaos, fit_noise, fit_sho
from .signal_models import (
    ChaosScale,
    DecayParams,
    LorenzParams,
    NoiseParams,
    SamplingGrid,
    SHOParams,
    TimeSeries,
    gen_decay,
    gen_sho,
    integrate_lorenz,
)
from .theory import DIMENSION_CASES, DimensionScenario

MASK64 = (1 << 64) - 1
ZERO_NOISE_FLOOR = 1e-300

MOTIFS = ("decay", "sho", "chaos", "dimension")
AXES = ("f", "M", "sigma", "sigma_ratio", "N")
POLICIES = ("fixed-M", "fixed-f", "fixed-t_max")


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def derive_key(*parts: int) -> int:
    """Chain ``splitmix64`` over the parts; distinct tuples give unrelated keys."""
    h = 0
    for p in parts:
        h = splitmix64(h ^ (int(p) & MASK64))
    return h


def trial_rng(key: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class Scenario:
    """One experiment design: a motif, one swept axis, and everything held fixed.

    ``policy`` says which of ``M``, ``f`` or ``t_max`` stays fixed while the axis
    moves. ``fit_start="truth"`` seeds the nonlinear fit at the generating rate
    or frequency; ``"global"`` runs the full multi-start search.
    """

    motif: str
    axis: str
    values: tuple
    policy: str = "fixed-M"
    f: float | None = None
    M: int | None = None
    t_max: float | None = None
    decay: DecayParams | None = None
    sho: SHOParams | None = None
    lorenz: LorenzParams | None = None
    chaos_scale: ChaosScale = field(default_factory=ChaosScale)
    noise: NoiseParams = field(default_factory=NoiseParams)
    case: str | None = None
    C: float | None = None
    x0_known: bool = True
    trials: int = 1000
    seed: int = 42
    fit_start: str = "truth"
    chaos_k: int = CHAOS_K

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))
        if self.motif not in MOTIFS:
            raise ValueError(f"motif must be one of {MOTIFS}")
        if self.axis not in AXES:
            raise ValueError(f"axis must be one of {AXES}")
        if self.policy not in POLICIES:
            raise ValueError(f"policy must be one of {POLICIES}")
        if not self.values:
            raise ValueError("sweep grid is empty")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.fit_start not in ("truth", "global"):
            raise ValueError("fit_start must be 'truth' or 'global'")
        needs = {"decay": "decay", "dimension": "decay", "sho": "sho", "chaos": "lorenz"}[self.motif]
        if getattr(self, needs) is None:
            raise ValueError(f"motif {self.motif!r} needs {needs} parameters")
        if self.motif == "dimension":
            if self.axis != "N" or self.case not in DIMENSION_CASES or self.C is None:
                raise ValueError("dimension sweeps need axis='N', a case and C")
        elif self.axis == "N":
            raise ValueError("axis 'N' is only meaningful for the dimension motif")
        fixed = {"f": self.axis == "f", "M": self.axis == "M"}
        if self.axis == "f" and self.policy == "fixed-f":
            raise ValueError("cannot sweep f with policy fixed-f")
        if self.axis == "M" and self.policy != "fixed-f":
            raise ValueError("sweeping M requires policy fixed-f")
        if not fixed["f"] and self.f is None:
            raise ValueError("sampling frequency f must be given")
        if self.motif != "dimension" and not fixed["M"]:
            if self.policy == "fixed-t_max" and self.t_max is None:
                raise ValueError("policy fixed-t_max needs t_max")
            if self.policy != "fixed-t_max" and self.M is None:
                raise ValueError("sample count M must be given")

    @property
    def amplitude(self) -> float:
        if self.motif == "sho":
            return self.sho.A
        if self.motif == "chaos":
            return self.chaos_scale.amplitude
        return self.decay.x0

    @property
    def models(self) -> tuple[str, str]:
        return ("decay" if self.motif == "dimension" else self.motif, "noise")

    def dimension_scenario(self) -> DimensionScenario:
        return DimensionScenario(self.case, self.C, 1.0 / self.f, self.decay.lam,
                                 self.decay.x0, self.noise.sigma)

    def point(self, i: int) -> tuple[SamplingGrid, NoiseParams, int]:
        """Grid, noise and dimension count at grid index ``i``."""
        v = self.values[i]
        f, noise, N = self.f, self.noise, 1
        M = self.M
        if self.axis == "f":
            f = float(v)
        elif self.axis == "M":
            M = int(v)
        elif self.axis == "sigma":
            noise = replace(noise, sigma=float(v))
        elif self.axis == "sigma_ratio":
            noise = replace(noise, sigma=float(v) * self.amplitude)
        elif self.axis == "N":
            N = int(v)
            M = self.dimension_scenario().M_for(N)
        if self.axis != "M" and self.policy == "fixed-t_max":
            M = int(round(f * self.t_max))
        return SamplingGrid(f, M), noise, N


@dataclass(frozen=True)
class TrialOutcome:
    point: int
    axis_value: float
    trial: int
    seed: int
    aic: dict
    selected: str | None
    converged: dict
    valid: bool
    attempts: int


@dataclass(frozen=True, eq=False)
class SweepResult:
    axis: str
    values: tuple
    models: tuple
    mean_aic: np.ndarray
    proportion: np.ndarray
    n_trials: np.ndarray
    n_invalid: np.ndarray
    outcomes: tuple = field(default=(), repr=False)

    def column(self, model: str) -> np.ndarray:
        return self.proportion[:, self.models.index(model)]

    def identical_to(self, other: "SweepResult") -> bool:
        return (self.axis == other.axis and self.values == other.values
                and self.models == other.models
                and np.array_equal(self.mean_aic, other.mean_aic, equal_nan=True)
                and np.array_equal(self.proportion, other.proportion, equal_nan=True)
                and np.array_equal(self.n_trials, other.n_trials)
                and np.array_equal(self.n_invalid, other.n_invalid))


@lru_cache(maxsize=64)
def _clean_lorenz(p: LorenzParams, f: float, M: int) -> TimeSeries:
    return integrate_lorenz(p, SamplingGrid(f, M))


def _generate(s: Scenario, grid: SamplingGrid, noise: NoiseParams, N: int, rng):
    if s.motif == "decay" or s.motif == "dimension":
        clean = gen_decay(s.decay, grid)
    elif s.motif == "sho":
        clean = gen_sho(s.sho, grid)
    else:
        clean = _clean_lorenz(s.lorenz, grid.f, grid.M)
    t = np.tile(clean.times, N)
    y = np.tile(clean.values, N) + noise.mu + noise.sigma * rng.standard_normal(N * grid.M)
    return clean, TimeSeries(t, y)


def _fit_motif(s: Scenario, ts: TimeSeries, clean: TimeSeries, floor: float):
    seeded = s.fit_start == "truth"
    if s.motif == "decay":
        return fit_decay(ts, lam_start=s.decay.lam if seeded else None, var_floor=floor)
    if s.motif == "dimension":
        return fit_decay(ts, x0_known=s.decay.x0 if s.x0_known else None,
                         lam_start=s.decay.lam if seeded else None, var_floor=floor)
    if s.motif == "sho":
        return fit_sho(ts, phase=s.sho.phi, omega_start=s.sho.omega if seeded else None,
                       var_floor=floor)
    return fit_known_chaos(ts, clean, k=s.chaos_k, var_floor=floor)


def run_trial(s: Scenario, point: int, trial: int) -> TrialOutcome:
    """Generate one dataset, fit the motif model and the noise null, compare by AIC.

    A degenerate or non-converged fit is retried once on a flagged sub-seed;
    if that also fails the trial is returned with ``valid=False``.
    """
    grid, noise, N = s.point(point)
    floor = ZERO_NOISE_FLOOR if noise.sigma == 0 else 0.0
    aic = {m: math.nan for m in s.models}
    converged = {m: False for m in s.models}
    selected, key = None, None
    for attempt in range(2):
        key = derive_key(s.seed, point, trial, attempt)
        clean, ts = _generate(s, grid, noise, N, trial_rng(key))
        try:
            fits = [_fit_motif(s, ts, clean, floor), fit_noise(ts, var_floor=floor)]
        except DegenerateVariance:
            continue
        cmp = compare(fits)
        aic = dict(cmp.aic)
        converged = {ft.model: ft.converged for ft in fits}
        if all(converged.values()):
            selected = cmp.selected
            break
    return TrialOutcome(point, float(s.values[point]), trial, key, aic, selected,
                        converged, selected is not None, attempt + 1)


def _run_chunk(args):
    s, point, start, stop = args
    return [run_trial(s, point, t) for t in range(start, stop)]


def aggregate(s: Scenario, outcomes: list[TrialOutcome]) -> SweepResult:
    """Order-independent reduction of trial outcomes into per-point statistics."""
    P, K = len(s.values), len(s.models)
    table = [[None] * s.trials for _ in range(P)]
    for o in outcomes:
        table[o.point][o.trial] = o
    mean_aic = np.full((P, K), math.nan)
    prop = np.full((P, K), math.nan)
    n_trials = np.zeros(P, dtype=int)
    n_invalid = np.zeros(P, dtype=int)
    for p in range(P):
        row = [o for o in table[p] if o is not None]
        n_trials[p] = len(row)
        valid = [o for o in row if o.valid]
        n_invalid[p] = len(row) - len(valid)
        if valid:
            for k, m in enumerate(s.models):
                mean_aic[p, k] = float(np.mean([o.aic[m] for o in valid]))
                prop[p, k] = sum(o.selected == m for o in valid) / len(valid)
    return SweepResult(s.axis, s.values, s.models, mean_aic, prop, n_trials, n_invalid,
                       tuple(o for row in table for o in row if o is not None))


def sweep(s: Scenario, workers: int = 1, chunk: int = 50) -> SweepResult:
    """Run every trial at every grid point and aggregate."""
    tasks = [(s, p, a, min(a + chunk, s.trials))
             for p in range(len(s.values)) for a in range(0, s.trials, chunk)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_run_chunk, tasks))
    else:
        parts = [_run_chunk(t) for t in tasks]
    return aggregate(s, [o for part in parts for o in part])


def find_crossover(r: SweepResult, model: str, level: float = 0.5) -> list[float]:
    """Axis values where the selection proportion of ``model`` crosses ``level``.

    Interpolates linearly in ``log(axis)``; an exact hit on a grid point counts
    when the neighbours lie on opposite sides. Returns all crossings, ascending.
    """
    p = r.column(model)
    x = np.log(np.asarray(r.values, dtype=float))
    order = np.argsort(x)
    x, p = x[order], p[order]
    keep = ~np.isnan(p)
    x, p = x[keep], p[keep] - level
    out = []
    n = len(p)
    for i in range(n):
        if p[i] == 0:
            left = p[i - 1] if i > 0 else None
            right = p[i + 1] if i < n - 1 else None
            if left is None or right is None or left * right < 0:
                out.append(math.exp(x[i]))
        elif i < n - 1 and p[i] * p[i + 1] < 0:
            w = p[i] / (p[i] - p[i + 1])
            out.append(math.exp(x[i] + w * (x[i + 1] - x[i])))
    if not out:
        raise NoCrossing(f"selection of {model!r} never crosses {level}")
    return sorted(out)


@dataclass(frozen=True)
class ToleranceResult:
    f: float
    critical_ratio: float
    crossings: tuple
    flag: str = ""


def noise_tolerance_curve(s: Scenario, f_values, ratios=None, coarse=None,
                          coarse_trials: int | None = None, workers: int = 1,
                          span: float = 2.5, n_fine: int = 13) -> list[ToleranceResult]:
    """Critical noise-to-amplitude ratio at each sampling frequency.

    ``s`` must hold ``t_max`` fixed. With explicit ``ratios`` a single sweep is
    run per frequency. Otherwise a coarse sweep over ``coarse`` (default 11
    points over ``[1e-2, 1e3]``) locates the transition and a fine sweep of
    ``n_fine`` points spanning a factor ``span`` either side measures it. The
    critical ratio is the geometric mean of all crossings found.
    """
    if s.policy != "fixed-t_max":
        raise ValueError("noise tolerance curves need policy fixed-t_max")
    if coarse is None:
        coarse = np.geomspace(1e-2, 1e3, 11)
    if coarse_trials is None:
        coarse_trials = max(20, s.trials // 4)
    model = s.models[0]
    out = []
    for i, f in enumerate(f_values):
        base = replace(s, axis="sigma_ratio", f=float(f))
        try:
            if ratios is None:
                r0 = sweep(replace(base, values=tuple(coarse), trials=coarse_trials,
                                   seed=derive_key(s.seed, i, 0)), workers=workers)
                c0 = math.exp(np.mean(np.log(find_crossover(r0, model))))
                grid = tuple(np.geomspace(c0 / span, c0 * span, n_fine))
            else:
                grid = tuple(ratios)
            r = sweep(replace(base, values=grid, seed=derive_key(s.seed, i, 1)), workers=workers)
            cr = find_crossover(r, model)
            out.append(ToleranceResult(float(f), math.exp(np.mean(np.log(cr))), tuple(cr)))
        except NoCrossing:
            out.append(ToleranceResult(float(f), math.nan, (), "no-crossing"))
    return out


@dataclass(frozen=True)
class ScalingFit:
    alpha: float
    intercept: float
    stderr: float


def fit_scaling_exponent(f_values, ratios) -> ScalingFit:
    """Least-squares slope of ``log(ratio)`` against ``log(f)``."""
    f = np.asarray(f_values, dtype=float)
    r = np.asarray(ratios, dtype=float)
    if f.size < 3 or np.any(f <= 0) or np.any(r <= 0):
        raise ValueError("need >= 3 points with positive f and ratio")
    res = stats.linregress(np.log(f), np.log(r))
    return ScalingFit(float(res.slope), float(res.intercept), float(res.stderr))


def snap_frequency(f: float, h: float) -> float:
    """Nearest frequency whose sample spacing is a whole number of steps ``h``."""
    n = max(1, int(round(1.0 / (f * h))))
    return 1.0 / (n * h)

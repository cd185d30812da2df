"""Clean and noisy trajectories for decay, harmonic oscillation and Lorenz chaos.

All generators sample on a :class:`SamplingGrid` with ``t_j = j / f`` for
``j = 0 .. M-1``. Noise is added separately by :func:`add_noise` from a caller
owned ``numpy.random.Generator``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .errors import LorenzDivergence


@dataclass(frozen=True)
class SamplingGrid:
    """Uniform sampling at frequency ``f`` for ``M`` samples."""

    f: float
    M: int

    def __post_init__(self):
        if not (self.f > 0 and math.isfinite(self.f)):
            raise ValueError(f"sampling frequency must be positive, got {self.f}")
        if int(self.M) != self.M or self.M < 1:
            raise ValueError(f"sample count must be a positive integer, got {self.M}")
        object.__setattr__(self, "M", int(self.M))

    @classmethod
    def from_tmax(cls, f: float, t_max: float) -> "SamplingGrid":
        return cls(f, max(1, int(round(f * t_max))))

    @property
    def dt(self) -> float:
        return 1.0 / self.f

    @property
    def t_max(self) -> float:
        return self.M * self.dt

    def times(self) -> np.ndarray:
        return np.arange(self.M) / self.f


@dataclass(frozen=True)
class DecayParams:
    x0: float
    lam: float

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"decay rate must be positive, got {self.lam}")
        if not math.isfinite(self.x0):
            raise ValueError("x0 must be finite")


@dataclass(frozen=True)
class NoiseParams:
    mu: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        if not self.sigma >= 0:
            raise ValueError(f"noise sigma must be >= 0, got {self.sigma}")


@dataclass(frozen=True)
class SHOParams:
    A: float
    omega: float
    phi: float = 0.0

    def __post_init__(self):
        if self.A < 0:
            raise ValueError("amplitude must be >= 0")
        if not self.omega > 0:
            raise ValueError("angular frequency must be positive")
        object.__setattr__(self, "phi", self.phi % (2 * math.pi))


@dataclass(frozen=True)
class LorenzParams:
    sigma: float = 10.0
    rho: float = 28.0
    beta: float = 8.0 / 3.0
    state0: tuple[float, float, float] = (1.0, 1.0, 1.0)
    h: float = 1e-3
    transient: float = 10.0

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("integrator step must be positive")
        if self.transient < 0:
            raise ValueError("transient must be >= 0")
        object.__setattr__(self, "state0", tuple(float(v) for v in self.state0))


@dataclass(frozen=True)
class ChaosScale:
    """Characteristic time and amplitude scales of the chaotic signal."""

    lyap: float = 0.906
    amplitude: float = 38.0

    def __post_init__(self):
        if not self.lyap > 0:
            raise ValueError("Lyapunov exponent must be positive")


@dataclass(frozen=True, eq=False)
class TimeSeries:
    times: np.ndarray
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=np.float64)
        v = np.asarray(self.values, dtype=np.float64)
        if t.shape != v.shape or t.ndim != 1:
            raise ValueError(f"times and values must be equal-length 1-D, got {t.shape} and {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("values must be finite")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.shape[0]


def gen_decay(p: DecayParams, grid: SamplingGrid) -> TimeSeries:
    t = grid.times()
    return TimeSeries(t, p.x0 * np.exp(-p.lam * t))


def gen_sho(p: SHOParams, grid: SamplingGrid) -> TimeSeries:
    t = grid.times()
    return TimeSeries(t, p.A * np.cos(p.omega * t + p.phi))


def _steps_per_sample(p: LorenzParams, grid: SamplingGrid) -> int:
    ratio = grid.dt / p.h
    n = int(round(ratio))
    if n < 1 or abs(n - ratio) > 1e-9 * ratio:
        raise ValueError(f"sample spacing {grid.dt} is not a positive integer multiple of h={p.h}")
    return n


def lorenz_trajectory(p: LorenzParams, grid: SamplingGrid) -> np.ndarray:
    """Full ``(M, 3)`` state at grid times, after discarding the transient."""
    stride = _steps_per_sample(p, grid)
    n_transient = int(round(p.transient / p.h))
    out, status = _backend.lorenz_rk4(
        np.asarray(p.state0, dtype=np.float64), p.sigma, p.rho, p.beta, p.h,
        n_transient, stride, grid.M,
    )
    if status >= 0:
        raise LorenzDivergence(f"non-finite Lorenz state at step {status} (t={status * p.h:g})")
    return out


def integrate_lorenz(p: LorenzParams, grid: SamplingGrid) -> TimeSeries:
    """x-component of an RK4 Lorenz trajectory sampled on ``grid``."""
    return TimeSeries(grid.times(), lorenz_trajectory(p, grid)[:, 0])


def estimate_lyapunov(p: LorenzParams, duration: float = 500.0,
                      renorm_interval: float = 0.5, d0: float = 1e-8) -> float:
    """Largest Lyapunov exponent by two-trajectory renormalization.

    A companion trajectory starts ``d0`` away along x after the transient, is
    advanced alongside the reference, and is pulled back to distance ``d0``
    every ``renorm_interval``. The estimate is the mean log growth rate.
    """
    steps = int(round(renorm_interval / p.h))
    n_renorm = int(round(duration / (steps * p.h)))
    if steps < 1 or n_renorm < 1:
        raise ValueError("duration must exceed renorm_interval, which must exceed h")
    total, status = _backend.lorenz_lyapunov(
        np.asarray(p.state0, dtype=np.float64), p.sigma, p.rho, p.beta, p.h,
        int(round(p.transient / p.h)), steps, n_renorm, d0,
    )
    if status >= 0:
        raise LorenzDivergence(f"non-finite Lorenz state at step {status}")
    return total / (n_renorm * steps * p.h)


def add_noise(ts: TimeSeries, noise: NoiseParams, rng: np.random.Generator) -> TimeSeries:
    # one standard normal per sample regardless of sigma keeps stream use fixed
    z = rng.standard_normal(len(ts))
    return TimeSeries(ts.times, ts.values + noise.mu + noise.sigma * z)

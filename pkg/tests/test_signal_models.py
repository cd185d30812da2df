import math

import numpy as np
import pytest

from icdyn.errors import LorenzDivergence
from icdyn.signal_models import (
    DecayParams,
    LorenzParams,
    NoiseParams,
    SamplingGrid,
    SHOParams,
    TimeSeries,
    add_noise,
    estimate_lyapunov,
    gen_decay,
    gen_sho,
    integrate_lorenz,
    lorenz_trajectory,
)

from oracles import lorenz_solve_ivp


def test_grid_basics():
    g = SamplingGrid(4.0, 8)
    assert g.dt == 0.25
    assert g.t_max == 2.0
    np.testing.assert_array_equal(g.times(), np.arange(8) / 4.0)
    assert SamplingGrid.from_tmax(10.0, 100.0).M == 1000


@pytest.mark.parametrize("f,M", [(0, 10), (-1, 10), (1, 0), (math.inf, 3)])
def test_grid_rejects_bad_values(f, M):
    with pytest.raises(ValueError):
        SamplingGrid(f, M)


def test_gen_decay_values():
    ts = gen_decay(DecayParams(1.0, 0.1), SamplingGrid(1.0, 3))
    np.testing.assert_allclose(ts.values, [1, math.exp(-0.1), math.exp(-0.2)], rtol=1e-15)
    assert np.all(gen_decay(DecayParams(0.0, 3.0), SamplingGrid(7.0, 20)).values == 0)
    last = gen_decay(DecayParams(2.0, 1.0), SamplingGrid(10.0, 100)).values[99]
    assert last == pytest.approx(2 * math.exp(-9.9), rel=1e-14)
    assert last == pytest.approx(1.003e-4, rel=1e-3)


def test_gen_sho_values():
    ts = gen_sho(SHOParams(1.0, 2 * math.pi, 0.0), SamplingGrid(4.0, 4))
    np.testing.assert_allclose(ts.values, [1, 0, -1, 0], atol=1e-15)
    assert np.all(gen_sho(SHOParams(0.0, 3.0), SamplingGrid(2.0, 9)).values == 0)
    ts = gen_sho(SHOParams(1.0, 2 * math.pi, math.pi / 2), SamplingGrid(4.0, 2))
    np.testing.assert_allclose(ts.values, [0, -1], atol=1e-15)


def test_params_validation():
    with pytest.raises(ValueError):
        DecayParams(1.0, 0.0)
    with pytest.raises(ValueError):
        NoiseParams(0.0, -1.0)
    with pytest.raises(ValueError):
        SHOParams(1.0, -2.0)
    with pytest.raises(ValueError):
        LorenzParams(h=0.0)
    assert SHOParams(1.0, 1.0, 2 * math.pi + 0.5).phi == pytest.approx(0.5)


def test_timeseries_validation():
    with pytest.raises(ValueError):
        TimeSeries(np.arange(3.0), np.arange(4.0))
    with pytest.raises(ValueError):
        TimeSeries(np.arange(2.0), np.array([0.0, np.nan]))


def test_lorenz_fixed_point_stays_put():
    p = LorenzParams(state0=(0.0, 0.0, 0.0))
    assert np.all(integrate_lorenz(p, SamplingGrid(10.0, 50)).values == 0)


def test_lorenz_matches_high_order_solver():
    p = LorenzParams(transient=0.0)
    x1 = lorenz_trajectory(p, SamplingGrid(1.0, 2))[1]
    np.testing.assert_allclose(x1, lorenz_solve_ivp([1.0, 1.0, 1.0], 1.0), rtol=1e-9)


def test_lorenz_step_halving_is_fourth_order():
    grid = SamplingGrid(2.0, 2)
    ref = lorenz_solve_ivp([1.0, 1.0, 1.0], 0.5)
    errs = [np.linalg.norm(lorenz_trajectory(LorenzParams(h=h, transient=0.0), grid)[1] - ref)
            for h in (0.01, 0.005, 0.0025)]
    assert 14 < errs[0] / errs[1] < 18
    assert 14 < errs[1] / errs[2] < 18


def test_lorenz_attractor_amplitude():
    x = integrate_lorenz(LorenzParams(), SamplingGrid(100.0, 20000)).values
    assert 15 <= np.max(np.abs(x)) <= 25
    assert 30 <= np.ptp(x) <= 45


def test_lorenz_grid_must_be_whole_steps():
    with pytest.raises(ValueError):
        integrate_lorenz(LorenzParams(), SamplingGrid(3.0, 10))


def test_lorenz_divergence_is_reported():
    with pytest.raises(LorenzDivergence):
        integrate_lorenz(LorenzParams(h=0.5, transient=0.0), SamplingGrid(2.0, 400))


def test_lyapunov_standard_parameters():
    a = estimate_lyapunov(LorenzParams(), duration=500)
    b = estimate_lyapunov(LorenzParams(), duration=1000)
    assert abs(a - 0.906) <= 0.05
    assert abs(a - b) < 0.02


def test_lyapunov_negative_when_stable():
    assert estimate_lyapunov(LorenzParams(rho=0.5), duration=100) < 0


def test_add_noise():
    ts = gen_decay(DecayParams(1.0, 0.1), SamplingGrid(1.0, 50))
    out = add_noise(ts, NoiseParams(0.7, 0.0), np.random.default_rng(1))
    np.testing.assert_array_equal(out.values, ts.values + 0.7)
    a = add_noise(ts, NoiseParams(0.0, 1.0), np.random.default_rng(5))
    b = add_noise(ts, NoiseParams(0.0, 1.0), np.random.default_rng(5))
    np.testing.assert_array_equal(a.values, b.values)


def test_add_noise_mean():
    M, sigma, mu = 10**5, 2.5, 0.3
    zero = TimeSeries(np.arange(M, dtype=float), np.zeros(M))
    y = add_noise(zero, NoiseParams(mu, sigma), np.random.default_rng(11)).values
    assert abs(y.mean() - mu) < 3 * sigma / math.sqrt(M)

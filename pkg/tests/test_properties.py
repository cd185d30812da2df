import math

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from icdyn.criteria import aic
from icdyn.estimation import fit_decay, fit_noise, fit_sho
from icdyn.montecarlo import Scenario, sweep
from icdyn.signal_models import DecayParams, NoiseParams, TimeSeries
from icdyn.theory import delta_aic_dimension, fc2, g_alpha_closed, g_alpha_series, mc_critical

import oracles

SLOW = settings(max_examples=1000, deadline=None, suppress_health_check=[HealthCheck.too_slow])


@st.composite
def datasets(draw):
    """Short series: pure noise, noisy decays and noisy sinusoids at random scales."""
    seed = draw(st.integers(0, 2**32 - 1))
    M = draw(st.integers(8, 80))
    f = draw(st.floats(0.1, 100.0))
    shape = draw(st.sampled_from(["noise", "decay", "sine"]))
    rng = np.random.default_rng(seed)
    t = np.arange(M) / f
    scale = 10 ** rng.uniform(-3, 3)
    y = rng.normal(rng.normal(0, 3), 1.0, M)
    if shape == "decay":
        y += rng.uniform(-5, 5) * np.exp(-rng.uniform(0.01, 5) * f * t / M * 10)
    elif shape == "sine":
        y += rng.uniform(0, 5) * np.cos(rng.uniform(0.05, 3) * f * t + rng.uniform(0, 6.3))
    return TimeSeries(t, scale * y)


@SLOW
@given(datasets())
def test_profiled_sigma_identity(ts):
    fit = fit_noise(ts)
    mu = ts.values.mean()
    s2 = fit.rss / fit.M
    assert fit.nll == pytest.approx(oracles.nll_gaussian(ts.values, mu, s2), rel=1e-9)
    assert aic(fit) == pytest.approx(2 * fit.k + fit.M * math.log(2 * math.pi * s2) + fit.M, rel=1e-9)
    # the profiled variance is the minimiser of the likelihood
    for s in (0.99, 1.01):
        assert oracles.nll_gaussian(ts.values, mu, s * s2) > fit.nll


@SLOW
@given(datasets())
def test_decay_fit_never_worse_than_noise(ts):
    assert fit_decay(ts).rss <= fit_noise(ts).rss * (1 + 1e-12)


@SLOW
@given(datasets())
def test_sho_fit_never_worse_than_noise(ts):
    noise = fit_noise(ts).rss * (1 + 1e-12)
    assert fit_sho(ts).rss <= noise
    assert fit_sho(ts, phase=0.0).rss <= noise


@settings(max_examples=500, deadline=None)
@given(st.floats(1e-6, 1e-2))
def test_g_series_matches_closed_form(alpha):
    assert g_alpha_series(alpha) == pytest.approx(g_alpha_closed(alpha), rel=1e-10)


@settings(max_examples=500, deadline=None)
@given(st.integers(2, 10**7), st.floats(1e-3, 1e3), st.floats(1e-2, 1e2), st.floats(1e-2, 1e2),
       st.sampled_from(["appendix", "main-text"]))
def test_mc_critical_inverts_fc2(M, lam, x0, sigma, variant):
    f = fc2(M, lam, x0, sigma, variant).value
    assert mc_critical(sigma, f, lam, x0, variant).value == pytest.approx(M, rel=1e-12)


@settings(max_examples=500, deadline=None)
@given(st.floats(0.1, 1e3), st.floats(1.0, 1e4), st.floats(1e-4, 1e2), st.floats(0.1, 10.0),
       st.floats(1.01, 10.0), st.sampled_from(["N", "M", "S"]))
def test_delta_aic_dimension_decreasing(N, M, S, sigma, factor, arg):
    base = dict(N=N, M=M, S=S, sigma=sigma)
    bigger = {**base, arg: base[arg] * factor}
    assert delta_aic_dimension(**bigger) < delta_aic_dimension(**base)


@settings(max_examples=4, deadline=None)
@given(st.integers(0, 2**63 - 1), st.integers(1, 9))
def test_serial_and_parallel_sweeps_bit_identical(seed, chunk):
    s = Scenario("decay", "f", (0.3, 8.0, 300.0), M=400, decay=DecayParams(1.0, 0.1),
                 noise=NoiseParams(0.0, 1.0), x0_known=False, trials=12, seed=seed)
    assert sweep(s).identical_to(sweep(s, workers=3, chunk=chunk))

import math

import numpy as np
import pytest

from bolab import fields, gibbs
from bolab.errors import ConfigurationError
from bolab.fields import FourierField

from conftest import random_field


def _params(**kw):
    base = dict(beta=0.0, n_ball=math.inf, modes=3, steps=200, burn_in=50,
                seed=1)
    base.update(kw)
    return gibbs.GibbsParams(**base)


def test_params_validation():
    with pytest.raises(ConfigurationError):
        _params(n_ball=-1.0)
    with pytest.raises(ConfigurationError):
        _params(modes=0)
    with pytest.raises(ConfigurationError):
        _params(steps=10, burn_in=10)


def test_ball_mass_matches_field_mass():
    rng = np.random.default_rng(0)
    state = rng.standard_normal(8)
    u = gibbs.state_to_field(state)
    assert gibbs.ball_mass(state) == pytest.approx(
        fields.l2_norm_sq(u), abs=1e-14)


def test_log_weight_outside_ball():
    p = _params(n_ball=0.5, modes=2)
    assert gibbs.log_weight(np.array([2.0, 0.0, 0.0, 0.0]), p) == -math.inf


def test_detailed_balance_exact():
    # pi(x) alpha(x->y) = pi(y) alpha(y->x) for the symmetric proposal kernel
    rng = np.random.default_rng(5)
    p = _params(beta=0.4, n_ball=4.0, modes=3)
    for _ in range(25):
        s = 0.4 * rng.standard_normal(6)
        q = 0.4 * rng.standard_normal(6)
        lws, lwq = gibbs.log_weight(s, p), gibbs.log_weight(q, p)
        if not (math.isfinite(lws) and math.isfinite(lwq)):
            continue
        lhs = lws + min(0.0, gibbs.log_accept_ratio(s, q, p))
        rhs = lwq + min(0.0, gibbs.log_accept_ratio(q, s, p))
        assert abs(lhs - rhs) < 1e-12


def test_free_measure_variances():
    rng = np.random.default_rng(11)
    draws = np.array([gibbs.sample_free(4, rng).cosine_amplitudes()
                      for _ in range(20000)])
    var = draws.var(axis=0)
    for j in range(1, 5):
        # iid Gaussian: sd of the sample variance is sqrt(2/n)/j
        assert abs(var[j - 1] - 1.0 / j) < 4.0 * math.sqrt(2.0 / 20000) / j


def test_metropolis_deterministic_and_in_ball():
    p = _params(n_ball=1.0, steps=800, burn_in=200, seed=42)
    a = gibbs.metropolis(p)
    b = gibbs.metropolis(p)
    assert np.array_equal(a.draws, b.draws)
    assert a.acceptance_rate == b.acceptance_rate
    assert all(gibbs.ball_mass(d) <= 1.0 + 1e-12 for d in a.draws)


def test_pairings_match_inner_product():
    p = _params(steps=300, burn_in=100, seed=7)
    samples = gibbs.metropolis(p)
    f = random_field(71, cutoff=3)
    vals = samples.pairings(f)
    for i in (0, 5, 42):
        assert vals[i] == pytest.approx(
            fields.inner(f, samples.field(i)), abs=1e-13)


def test_free_pairing_variance_monte_carlo():
    f = random_field(72, cutoff=4)
    rng = np.random.default_rng(13)
    n = 40000
    vals = np.empty(n)
    for i in range(n):
        vals[i] = fields.inner(f, gibbs.sample_free(4, rng))
    analytic = gibbs.free_pairing_variance(f, 4)
    assert abs(np.var(vals) - analytic) < 5.0 * math.sqrt(2.0 / n) * analytic


def test_lmgf_gaussian_limit():
    # for the free measure, log E e^X - E X -> Var X / 2
    p = _params(modes=2, steps=20000, burn_in=2000, seed=3)
    samples = gibbs.metropolis(p)
    f = 0.5 * random_field(73, cutoff=2)
    v = float(np.var(samples.pairings(f)))
    assert gibbs.lmgf(f, samples) == pytest.approx(v / 2.0, abs=0.1 * v + 0.01)


def test_concentration_diag():
    p = _params(modes=3, steps=20000, burn_in=2000, seed=9)
    samples = gibbs.metropolis(p)
    f = random_field(74, cutoff=3)
    rep = gibbs.concentration_diag(samples, f)
    std = math.sqrt(rep.variance)
    assert rep.r_squared > 0.9
    assert 0.6 * std < rep.sigma_fit < 1.6 * std


def test_rejection_oracle():
    rng = np.random.default_rng(17)
    out = gibbs.rejection_truncated_pair(1.0, 5000, rng)
    assert out.shape == (5000, 2)
    radii = 0.5 * np.sum(out ** 2, axis=1)
    assert radii.max() <= 1.0
    # radius CDF of the truncated standard pair: (1-e^{-r})/(1-e^{-1})
    from scipy.stats import kstest
    stat = kstest(radii, lambda r: (1 - np.exp(-r)) / (1 - np.exp(-1.0))).statistic
    assert stat < 0.03

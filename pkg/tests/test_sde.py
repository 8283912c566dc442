import math

import numpy as np
import pytest
from scipy import stats

from gb2kit import dist, sde
from gb2kit.sde import SdeConfig


def test_bp_map_example():
    # kappa1^2 = 2 gamma theta / p and kappa2^2 = 2 gamma / (q - 1) with p=3, q=4
    c = SdeConfig(1.0, 1.0, math.sqrt(2 / 3), math.sqrt(2 / 3))
    d = sde.steady_state_spec(c)
    assert d.family == "BP"
    np.testing.assert_allclose(d.values, (3.0, 4.0, 1.0), rtol=1e-14)


@pytest.mark.parametrize("target", [dist.bp(3, 4, 1), dist.bp(13.3205, 3.7632, 23.4072),
                                    dist.gb2(2, 3, 2, 1), dist.gb2(3.03, 1.5521, 1.8265, 57.52)],
                         ids=lambda d: d.family)
def test_config_round_trip(target):
    c = sde.config_for(target, gamma_rate=0.7)
    d = sde.steady_state_spec(c)
    assert d.family == target.family
    np.testing.assert_allclose(d.values, target.values, rtol=1e-12)


def test_alpha_one_gb2_map_equals_bp_map():
    a = sde.config_for(dist.bp(3, 4, 2))
    b = sde.config_for(dist.gb2(3, 4, 1, 2))
    assert a == b


def test_limiting_steady_states():
    assert sde.steady_state_spec(SdeConfig(1.0, 1.0, 0.0, 0.8)).family == "Ga"
    assert sde.steady_state_spec(SdeConfig(1.0, 1.0, 0.8, 0.0)).family == "IGa"
    assert sde.steady_state_spec(SdeConfig(1.0, 1.0, 0.0, 0.8, alpha=2.0)).family == "GGa"
    assert sde.steady_state_spec(SdeConfig(1.0, 1.0, 0.8, 0.0, alpha=2.0)).family == "GIGa"
    # Ga steady state of dx = -g(x - th)dt + k sqrt(x) dW: shape 2 g th / k^2, scale k^2 / (2 g)
    d = sde.steady_state_spec(SdeConfig(1.5, 2.0, 0.0, 0.8))
    np.testing.assert_allclose(d.values, (2 * 1.5 * 2.0 / 0.64, 0.64 / 3.0), rtol=1e-14)


def test_limits_agree_with_vanishing_volatility():
    # IGa is the kappa_alpha -> 0 limit of BP
    bp = sde.steady_state_spec(SdeConfig(1.0, 2.0, 0.5, 1e-6))
    iga = sde.steady_state_spec(SdeConfig(1.0, 2.0, 0.5, 0.0))
    x = dist.quantile(iga, np.array([0.2, 0.5, 0.8]))
    np.testing.assert_allclose(dist.cdf(bp, x), dist.cdf(iga, x), atol=1e-6)


def test_invalid_configs():
    with pytest.raises(sde.InvalidConfig):
        sde.steady_state_spec(SdeConfig(1.0, 1.0, 0.0, 0.0))
    with pytest.raises(sde.InvalidConfig):
        SdeConfig(-1.0, 1.0, 0.5, 0.5)
    with pytest.raises(sde.InvalidConfig):
        SdeConfig(1.0, 1.0, -0.5, 0.5)
    with pytest.raises(sde.InvalidConfig):
        # p = (alpha - 1 + 2 g th / ka^2) / alpha <= 0
        sde.steady_state_spec(SdeConfig(1.0, 0.01, 0.5, 1.0, alpha=0.5))


def test_config_dict_round_trip():
    c = SdeConfig(1.0, 2.0, 0.3, 0.4, alpha=1.5, dt=1e-3, n_paths=64)
    assert SdeConfig.from_dict(c.to_dict()) == c
    alias = SdeConfig.from_dict({"gamma_rate": 1.0, "theta": 2.0, "kappa2": 0.3, "kappa1": 0.4})
    assert alias.kappa_alpha == 0.4 and alias.kappa1 == 0.4


def test_noiseless_relaxes_to_theta():
    c = SdeConfig(1.0, 2.5, 0.0, 0.0, x0=0.5, n_paths=4, burn_in=20000, thin=10)
    r = sde.simulate(c, seed=0, n=40)
    np.testing.assert_allclose(r.sample.values, 2.5, rtol=1e-6)
    assert r.guard_rate == 0.0


def _small(target, **kw):
    return sde.config_for(target, n_paths=300, **kw)


def test_deterministic_given_seed(monkeypatch):
    c = _small(dist.bp(3, 4, 1), dt=5e-3)
    monkeypatch.setenv("GB2KIT_THREADS", "1")
    a = sde.simulate(c, seed=42, n=3000)
    monkeypatch.setenv("GB2KIT_THREADS", "4")
    b = sde.simulate(c, seed=42, n=3000)
    c2 = sde.simulate(c, seed=43, n=3000)
    np.testing.assert_array_equal(a.sample.original(), b.sample.original())
    assert not np.array_equal(a.sample.original(), c2.sample.original())


def test_bp_steady_state_small():
    target = dist.bp(3, 4, 1)
    r = sde.simulate(_small(target, dt=2e-3), seed=1, n=15000)
    assert r.sample.n == 15000
    ks = stats.kstest(r.sample.values, lambda x: dist.cdf(target, x)).statistic
    assert ks < 0.03


def test_instability_detected():
    c = sde.config_for(dist.bp(1.2, 1.5, 1.0), dt=1.5, burn_in=10, thin=1, n_paths=64)
    with pytest.raises(sde.InstabilityError):
        sde.simulate(c, seed=1, n=640)

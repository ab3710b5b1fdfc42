import numpy as np
import pytest
from hypothesis import given, strategies as st

from pfilter.adapt import AdaptivityError, pi_hat, pi_hat_loo
from pfilter.model import Layer, finest_layer

ADAPTIVE4 = finest_layer(4, 0.1, adaptive=True, lam=0.5)
GP = [0.01, 0.02, 0.3, 0.6]


def test_non_adaptive_is_one():
    assert pi_hat(finest_layer(4, 0.1), GP) == 1.0
    assert pi_hat_loo(finest_layer(4, 0.1), GP, 0) == 1.0


def test_pi_hat_examples():
    assert pi_hat(ADAPTIVE4, GP) == pytest.approx(1.0)
    assert pi_hat(ADAPTIVE4, [0.6, 0.7, 0.8, 0.9]) == pytest.approx(2.5)


def test_pi_hat_loo_examples():
    assert pi_hat_loo(ADAPTIVE4, GP, 3) == pytest.approx(0.5)
    assert pi_hat_loo(ADAPTIVE4, GP, 0) == pi_hat(ADAPTIVE4, GP)


def test_threshold_is_strict():
    # P_g == lambda does not count as an exceedance
    assert pi_hat(ADAPTIVE4, [0.5] * 4) == pytest.approx(0.5)


def test_bad_lambda():
    layer = Layer(groups=((0,),), alpha=0.1, adaptive=True, lam=1.0)
    with pytest.raises(AdaptivityError):
        pi_hat(layer, [0.3])


def test_weighted_formula():
    layer = Layer(groups=((0,), (1,), (2,)), alpha=0.1, adaptive=True, lam=0.25,
                  w=(1.5, 1.0, 0.5), u=(1.0, 1.0, 1.0))
    # max uw = 1.5; exceedances 1.0 + 0.5
    assert pi_hat(layer, [0.1, 0.3, 0.9]) == pytest.approx((1.5 + 1.5) / (3 * 0.75))


@given(st.lists(st.floats(0, 1), min_size=1, max_size=15), st.floats(0.05, 0.95))
def test_loo_bounds(gp, lam):
    layer = finest_layer(len(gp), 0.1, adaptive=True, lam=lam)
    full = pi_hat(layer, gp)
    G = len(gp)
    for g in range(G):
        loo = pi_hat_loo(layer, gp, g)
        assert loo <= full + 1e-12
        assert full - loo <= 1 / (G * (1 - lam)) + 1e-12
    assert full >= 1 / (G * (1 - lam)) - 1e-12

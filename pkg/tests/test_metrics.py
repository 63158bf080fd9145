import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cyrisk.risk.lossfit import fit_loss
from cyrisk.risk.metrics import LossSample, empirical_cvar, empirical_var, risk_metrics

losses = arrays(float, st.integers(1, 200), elements=st.floats(0, 1e6, allow_nan=False))


def test_cvar_on_zero_atom():
    # 95 zeros and five losses of 200: the lower quantile sits on the atom, CVaR is the worst-5% mean
    x = np.r_[np.zeros(95), np.full(5, 200.0)]
    assert empirical_var(x, 0.95) == pytest.approx(10.0)      # interpolated between order statistics
    assert empirical_cvar(x, 0.95) == pytest.approx(200.0)
    x = np.r_[np.zeros(99), 2000.0]
    assert empirical_cvar(x, 0.95) == pytest.approx(400.0)


def test_uniform_grid():
    x = np.arange(1, 10_001, dtype=float)
    assert empirical_var(x, 0.95) == pytest.approx(9500.05)
    assert empirical_cvar(x, 0.95) == pytest.approx(9750.5)


@given(losses, st.floats(0.01, 0.99))
@settings(max_examples=200, deadline=None)
def test_var_le_cvar_le_max(x, level):
    # CVaR is a tail average, so it never exceeds the largest loss
    v, c = empirical_var(x, level), empirical_cvar(x, level)
    assert v <= c * (1 + 1e-12) + 1e-9
    assert c <= x.max() * (1 + 1e-12) + 1e-9


@given(losses, st.floats(0.01, 0.98), st.floats(0.001, 0.01))
@settings(max_examples=200, deadline=None)
def test_monotone_in_level(x, level, step):
    assert empirical_var(x, level) <= empirical_var(x, level + step) + 1e-9
    assert empirical_cvar(x, level) <= empirical_cvar(x, level + step) * (1 + 1e-12) + 1e-9


def test_risk_report():
    rng = np.random.default_rng(0)
    x = np.where(rng.random(5000) < 0.2, 0.0, rng.gamma(2, 100, 5000))
    rep = risk_metrics(LossSample(x, portfolio="000+A"), fit_loss(x), 0.95, {"P": 0.1}, {"DoS": 3.0})
    assert rep.portfolio == "000+A" and rep.M == 5000
    assert rep.zero_prob[0] == pytest.approx(np.mean(x == 0))
    assert rep.zero_prob[1] == pytest.approx(rep.zero_prob[0])
    assert rep.var[1] == pytest.approx(rep.var[0], rel=0.05)
    assert rep.var_se > 0 and rep.cvar_se > 0
    d = rep.as_dict()
    assert d["block_frequencies"] == {"P": 0.1} and d["by_source"] == {"DoS": 3.0}
    bare = risk_metrics(x)
    assert np.isnan(bare.var[1]) and bare.n_components == 0
    with pytest.raises(ValueError):
        risk_metrics(x, level=1.0)
    with pytest.raises(ValueError):
        LossSample(np.array([1.0, np.nan]))


def test_cvar_matches_sorted_tail_oracle():
    rng = np.random.default_rng(5)
    for n in (7, 100, 1001):
        x = rng.gamma(0.5, 10, n)
        for level in (0.5, 0.9, 0.95):
            # oracle: sorted values weighted so the tail holds exactly 1 - level of the mass
            s = np.sort(x)[::-1]
            w = np.clip((1 - level) * n - np.arange(n), 0, 1)
            assert empirical_cvar(x, level) == pytest.approx((w * s).sum() / ((1 - level) * n))

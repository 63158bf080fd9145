import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cyrisk.ara import (
    SELF,
    AttackerAction,
    AttackerSpec,
    NotorietyObjective,
    SensitiveInfoObjective,
    draw_random_expected_utility,
    estimate_targeting,
    log_random_expected_utility,
    simulate_targeted_campaign,
)
from cyrisk.attack import AttackType, simulate_untargeted
from cyrisk.errors import ConfigurationError
from cyrisk.impact import ImpactCategory, ImpactEntry
from cyrisk.model import Block, ControlCatalog, Control, Portfolio, PortfolioTable, SystemGraph
from cyrisk.stochastic import Beta, Dirichlet, Gamma, PointMass, Poisson, RngStream, Uniform
from cyrisk.transit import EntranceModel, Pnp

GRAPH = SystemGraph((Block("P", level=1, entry_capable=True), Block("L", level=1, entry_capable=True),
                     Block("D", level=2)), (("P", "D"), ("L", "D")))
CATS = (ImpactCategory("financial", unit="keuros"),)
CAT = ControlCatalog((Control("AML", icost=300),))
P0 = Portfolio((0,))
PNP = PortfolioTable((), {"0": Pnp({"P": Beta(8, 3), "L": Beta(9, 4)},
                                   {("P", "D"): Beta(10, 3), ("L", "D"): Beta(11, 3)})})
IMP = PortfolioTable((), {"0": ImpactEntry(financial=Gamma(13, 2))})
COMBOS = (("L",), ("P",), ("P", "L"))
NOTORIETY = NotorietyObjective(Gamma(8, 3), Poisson(25), 6e6)


def spec(actions, types=None, arrival=Poisson(4)):
    return AttackerSpec("Cy", tuple(actions), arrival, Uniform(1e-6, 2e-6), Uniform(100000, 130000),
                        types or {"jam": AttackType("jam", PNP, IMP, combos=COMBOS)})


def own_actions(success=Beta(60, 40)):
    return [AttackerAction(SELF, "jam", Beta(1, 999), success, NOTORIETY, c) for c in COMBOS]


def test_notoriety_mean_and_omega():
    assert NOTORIETY.mean() == pytest.approx(24_000 + 25 * 6e6)
    scaled = NotorietyObjective(Gamma(8, 3), Poisson(25), 6e6, PortfolioTable(("AML",), {"0": 0.8, "1": 0.2}))
    fin, fat = scaled.at(P0, CAT)
    assert (fin.shape, fin.scale, fat.rate) == pytest.approx((6.4, 2.4, 20.0))


def test_sensitive_info_mean():
    obj = SensitiveInfoObjective(Uniform(80, 120), PortfolioTable(("AML",), {"0": 660, "1": 360}))
    assert obj.mean(P0, CAT) == pytest.approx(330 * 100)
    assert obj.mean(Portfolio((1,)), CAT) == pytest.approx(180 * 100)
    x = obj.draw(RngStream(0).generator(), 200_000, P0, CAT)
    assert x.mean() == pytest.approx(33_000, rel=0.01)


def test_log_utility_matches_direct_formula():
    # small gains keep exp(H * gain) finite, so the direct form can be compared
    obj = SensitiveInfoObjective(Uniform(80, 120), 600.0)
    a = AttackerAction("c2", "AML_at", Beta(4, 996), Beta(1, 1), obj)
    s = spec([a])
    rng1, rng2 = RngStream(3).generator(), RngStream(3).generator()
    logv = log_random_expected_utility(a, s, P0, CAT, rng1, 1000)
    h = s.risk_proneness.sample(rng2, 1000)
    p = Beta(1, 1).sample(rng2, 1000)
    cd = Beta(4, 996).sample(rng2, 1000) * s.detection_cost.sample(rng2, 1000)
    g = obj.draw(rng2, 1000)
    direct = np.exp(-h * cd) * (p * np.exp(h * g) + 1 - p)
    assert np.allclose(np.exp(logv), direct, rtol=1e-10)
    v = draw_random_expected_utility(a, s, P0, CAT, RngStream(1))
    assert isinstance(v, float) and v > 0


def test_single_action_tau_is_one():
    est = estimate_targeting(spec(own_actions()[:1]), P0, CAT, 500, RngStream(0))
    assert est.tau.tolist() == [1.0]
    assert est.gamma["jam"].tolist() == [501.0]


def test_v_one_gives_gamma_one_or_two():
    est = estimate_targeting(spec(own_actions()), P0, CAT, 1, RngStream(0))
    g = est.gamma["jam"]
    assert set(g.tolist()) <= {1.0, 2.0} and g.sum() == 4.0


@given(st.integers(1, 300), st.integers(0, 2**31))
@settings(max_examples=25, deadline=None)
def test_tau_simplex_and_laplace_gamma(v, seed):
    comp = [AttackerAction("c2", "AML_at", Beta(6, 994), Beta(1, 1),
                           NotorietyObjective(Gamma(7.2, 2.7), Poisson(22.5), 6e6))]
    est = estimate_targeting(spec(own_actions() + comp), P0, CAT, v, RngStream(seed))
    assert est.tau.sum() == pytest.approx(1.0)
    assert np.all(est.tau >= 0)
    assert np.all(est.gamma["jam"] >= 1)
    assert est.gamma["jam"].sum() == pytest.approx(v * est.tau[0] + 3)


def test_targeting_prefers_dominant_action():
    # small fixed gains so that the success probability dominates the utility
    obj = SensitiveInfoObjective(PointMass(100.0), 600.0)
    weak = [AttackerAction(SELF, "jam", Beta(1, 999), Beta(1, 99), obj, c) for c in COMBOS]
    strong = [AttackerAction("c2", "x", Beta(1, 999), Beta(99, 1), obj)]
    est = estimate_targeting(spec(weak + strong), P0, CAT, 2000, RngStream(0))
    assert est.tau_for("c2") > 0.9


def test_spec_validation():
    with pytest.raises(ConfigurationError):
        AttackerAction(SELF, "jam", Beta(1, 1), Beta(1, 1), NOTORIETY)      # missing combo
    with pytest.raises(ConfigurationError, match="unknown attack type"):
        spec([AttackerAction(SELF, "nope", Beta(1, 1), Beta(1, 1), NOTORIETY, ("P",))])


def test_targeted_equals_untargeted_when_tau_is_degenerate():
    """With all targeting mass on our system and the same Dirichlet over combos,
    the targeted campaign is an untargeted one with the same arrival rate."""
    s = spec(own_actions())
    est = estimate_targeting(s, P0, CAT, 10, RngStream(0))
    est = type(est)(est.targets, np.array([1.0]), {"jam": np.array([4.0, 8.0, 1.0])}, est.combos,
                    est.action_labels, est.action_freq, est.n_draws)
    untargeted = AttackType("jam", PNP, IMP, arrival=Poisson(4),
                            entrance=EntranceModel(COMBOS, weights=Dirichlet((4, 8, 1))))
    stream = RngStream(42).child("c")
    a = simulate_targeted_campaign(s, est, GRAPH, P0, CAT, CATS, {}, 2000, stream)
    b = simulate_untargeted(GRAPH, untargeted, P0, CAT, CATS, {}, 2000, stream)
    assert np.array_equal(a[0], b[0])
    assert np.array_equal(a[2], b[2])


def test_attacks_on_competitors_cost_nothing():
    s = spec(own_actions())
    est = estimate_targeting(s, P0, CAT, 10, RngStream(0))
    others = type(est)(((SELF, "jam"), ("c2", None)), np.array([0.0, 1.0]), est.gamma, est.combos,
                       est.action_labels, est.action_freq, est.n_draws)
    losses, retained, hits = simulate_targeted_campaign(s, others, GRAPH, P0, CAT, CATS, {}, 500, RngStream(1))
    assert not losses.any() and not hits.any()


def test_zero_arrival_rate():
    at = AttackType("x", PNP, IMP, arrival=Poisson(0), entrance=EntranceModel(COMBOS, weights=Dirichlet((1, 1, 1))))
    losses, _, _ = simulate_untargeted(GRAPH, at, P0, CAT, CATS, {}, 100, RngStream(0))
    assert not losses.any()


def test_point_mass_arrivals_sum():
    pnp = PortfolioTable((), {"0": Pnp({"P": PointMass(1.0), "L": PointMass(1.0)},
                                       {("P", "D"): PointMass(0.0), ("L", "D"): PointMass(0.0)})})
    imp = PortfolioTable((), {"0": ImpactEntry(financial=PointMass(2.0))})
    at = AttackType("x", pnp, imp, arrival=PointMass(3), entrance=EntranceModel((("P",),), weights=PointMass((1.0,))))
    losses, _, hits = simulate_untargeted(GRAPH, at, P0, CAT, CATS, {}, 10, RngStream(0))
    assert np.all(losses == 6000.0)
    assert hits[:, 0].all() and not hits[:, 1:].any()

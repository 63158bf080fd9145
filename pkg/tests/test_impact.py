import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cyrisk.errors import ConfigurationError
from cyrisk.impact import ImpactCategory, ImpactEntry, simulate_impact, simulate_impact_batch
from cyrisk.model import Block, InsuranceProduct, SystemGraph
from cyrisk.stochastic import Gamma, PointMass, RngStream

GRAPH = SystemGraph((Block("P", level=1, entry_capable=True), Block("L", level=1, entry_capable=True),
                     Block("D", level=2)), (("P", "D"), ("L", "D")))
CATS = (ImpactCategory("financial", scope="global", unit="keuros"),
        ImpactCategory("equipment_damage", scope="separable", unit="keuros", aggregation="sum"),
        ImpactCategory("downtime", scope="separable", unit="hours", aggregation="max", rate=100))
ENTRY = ImpactEntry(financial=Gamma(10, 2),
                    equipment_damage={"P": Gamma(9, 2), "L": Gamma(8, 2), "D": Gamma(10, 2)},
                    downtime={"P": Gamma(17, 2), "L": Gamma(14, 2), "D": Gamma(16, 2)})
POINT = ImpactEntry(financial=PointMass(2.0), equipment_damage={b: PointMass(v) for b, v in zip("PLD", (1, 2, 3))},
                    downtime={b: PointMass(v) for b, v in zip("PLD", (5, 7, 6))})
INS_A = InsuranceProduct("A", {"equipment_damage": 0.65})
INS_B = InsuranceProduct("B", {"equipment_damage": 0.70, "downtime": 0.70})


def test_point_mass_aggregation():
    loss, parts = simulate_impact([1, 0, 1], GRAPH, POINT, CATS, stream=RngStream(0))
    assert parts == {"financial": 2000.0, "equipment_damage": 4000.0, "downtime": 600.0}
    assert loss == 6600.0


def test_insurance_shares():
    _, a = simulate_impact([1, 1, 1], GRAPH, POINT, CATS, INS_A, stream=RngStream(0))
    _, b = simulate_impact([1, 1, 1], GRAPH, POINT, CATS, INS_B, stream=RngStream(0))
    assert a["equipment_damage"] == pytest.approx(0.35 * 6000)
    assert a["downtime"] == 700.0
    assert b["downtime"] == pytest.approx(0.3 * 700)


def test_weights():
    loss, _ = simulate_impact([1, 0, 0], GRAPH, POINT, CATS, weights={"downtime": 0.0}, stream=RngStream(0))
    assert loss == 2000.0 + 1000.0


@given(arrays(bool, (64, 3)), st.integers(0, 10_000))
@settings(max_examples=50, deadline=None)
def test_no_compromise_no_loss(hit, seed):
    res = simulate_impact_batch(hit, GRAPH, ENTRY, CATS, INS_A, stream=RngStream(seed))
    none = ~hit.any(axis=1)
    assert np.all(res.loss[none] == 0)
    assert np.all(res.loss[~none] > 0)


@given(arrays(bool, (64, 3)), st.integers(0, 10_000),
       st.fixed_dictionaries({"financial": st.floats(0, 1), "equipment_damage": st.floats(0, 1),
                              "downtime": st.floats(0, 1)}))
@settings(max_examples=50, deadline=None)
def test_insurance_never_increases_retained(hit, seed, covers):
    plain = simulate_impact_batch(hit, GRAPH, ENTRY, CATS, None, stream=RngStream(seed))
    ins = simulate_impact_batch(hit, GRAPH, ENTRY, CATS, InsuranceProduct("X", covers), stream=RngStream(seed))
    assert np.all(ins.retained <= plain.retained + 1e-9)
    assert np.all(ins.loss <= plain.loss + 1e-9)
    assert np.array_equal(ins.gross, plain.gross)


def test_separable_needs_block_entry():
    entry = ImpactEntry(downtime={"P": PointMass(1)})
    with pytest.raises(ConfigurationError, match="block 'D'"):
        simulate_impact([0, 0, 1], GRAPH, entry, CATS, stream=RngStream(0))
    # unhit blocks may be absent
    assert simulate_impact([1, 0, 0], GRAPH, entry, CATS, stream=RngStream(0))[0] == 100.0


def test_category_validation():
    with pytest.raises(ConfigurationError):
        ImpactCategory("x", scope="local")
    with pytest.raises(ConfigurationError):
        ImpactCategory("x", unit="dollars")
    assert ImpactCategory("h", unit="hours", rate=100).to_euros == 100

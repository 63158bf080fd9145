import copy
import itertools

import pytest
import yaml

import ads_reference as ref
from cyrisk.ara import SELF, NotorietyObjective, SensitiveInfoObjective
from cyrisk.errors import ConfigurationError, ScenarioError
from cyrisk.model import Portfolio
from cyrisk.scenario import (
    builtin_scenario,
    dump_scenario,
    load_scenario,
    loads_scenario,
    parse_scenario,
    scenario_to_dict,
)

BLOCK_ORDER = ("P", "L", "D")
COMBO = {"L": ("L",), "P": ("P",), "both": ("P", "L")}


def _beta(d):
    return (d.a, d.b)


def _gamma(d):
    return (d.shape, d.scale)


def _portfolio(row):
    return Portfolio.from_key("".join(map(str, row)))


def _pnp_row(entry):
    e = entry.entry
    return (_beta(e["P"]), _beta(e["L"]), _beta(entry.edges[("P", "D")]), _beta(entry.edges[("L", "D")]))


def _impact_row(entry):
    def sep(cat):
        return tuple(_gamma(entry[cat][b]) for b in BLOCK_ORDER) if cat in entry else None
    return (_gamma(entry["financial"]), sep("equipment_damage"), sep("downtime"))


def _untargeted(ads, tid):
    return next(t for t in ads.attack_types if t.id == tid)


def _own(attacker, tid, combo):
    return next(a for a in attacker.actions if a.system == SELF and a.attack == tid and a.combo == combo)


# ---------------------------------------------------------------- structure


def test_ads_structure(ads):
    assert tuple(ads.graph.ids) == BLOCK_ORDER and ads.graph.k == 2
    assert set(ads.graph.entry_ids()) == {"P", "L"}
    assert [t.id for t in ads.attack_types] == ["DoS", "SCT"]
    assert [a.id for a in ads.attackers] == ["Cy", "Cr"]
    assert list(ads.catalog.ids) == ["FwGw", "AML", "PmVs"]
    assert set(ads.insurance) == {"A", "B"}
    assert ads.space.size == 16
    assert len(ads.attacker("Cy").actions) == 10 and len(ads.attacker("Cr").actions) == 5
    with pytest.raises(ConfigurationError):
        ads.portfolio("000")          # insurance is compulsory in the decision space
    with pytest.raises(ConfigurationError):
        ads.attacker("Zz")


# ---------------------------------------------------------------- every table cell against the reference


def test_costs_constraints_insurance(ads):
    assert {c.id: c.icost for c in ads.catalog} == ref.ICOST
    assert all(c.mcost == 0 for c in ads.catalog)
    assert ads.constraints.total_budget == ref.BUDGET
    assert ads.constraints.required_insurance == {"A", "B"}
    assert {c.id: c.to_euros for c in ads.categories} == {"financial": 1000, "equipment_damage": 1000,
                                                          "downtime": ref.DOWNTIME_RATE}
    for pid, covers in ref.COVERS.items():
        assert ads.insurance[pid].covered_fraction == covers
        for row, price in ref.PRICES[pid].items():
            assert ads.insurance[pid].price("".join(map(str, row))) == price


@pytest.mark.parametrize("tid,rate,alpha,pnp,impact", [
    ("DoS", ref.DOS_RATE, ref.DOS_DIRICHLET, ref.DOS_PNP, ref.DOS_IMPACT),
    ("SCT", ref.SCT_RATE, ref.SCT_DIRICHLET, ref.SCT_PNP, ref.SCT_IMPACT),
])
def test_untargeted_tables(ads, tid, rate, alpha, pnp, impact):
    t = _untargeted(ads, tid)
    assert t.arrival.rate == rate
    assert t.entrance.combos == (("P",), ("L",), ("P", "L"))
    assert t.entrance.weights.alpha == alpha
    for row, expected in pnp.items():
        assert _pnp_row(t.pnp.lookup(_portfolio(row), ads.catalog)) == expected, row
    for row, expected in impact.items():
        assert _impact_row(t.impacts.lookup(_portfolio(row), ads.catalog)) == expected, row
    # AML plays no part in DoS: its rows ignore the AML flag
    if tid == "DoS":
        for row in pnp:
            aml = (row[0], 1, row[2])
            assert _pnp_row(t.pnp.lookup(_portfolio(aml), ads.catalog)) == pnp[row]


def test_attacker_common(ads):
    for aid, rate in (("Cy", ref.CY_RATE), ("Cr", ref.CR_RATE)):
        a = ads.attacker(aid)
        assert a.arrival.rate == rate
        assert (a.risk_proneness.lo, a.risk_proneness.hi) == ref.RISK_PRONENESS
        assert (a.detection_cost.lo, a.detection_cost.hi) == ref.DETECTION_COST


@pytest.mark.parametrize("tid,detection,success,pnp,impact,omega_col", [
    ("Cy_AML", ref.CY_AML_DETECTION, ref.CY_AML_SUCCESS, ref.CY_AML_PNP, ref.CY_AML_IMPACT, 0),
    ("Cy_wir_jam", ref.CY_JAM_DETECTION, ref.CY_JAM_SUCCESS, ref.CY_JAM_PNP, ref.CY_JAM_IMPACT, 1),
])
def test_cyberterrorist_tables(ads, tid, detection, success, pnp, impact, omega_col):
    cy = ads.attacker("Cy")
    t = cy.attack_types[tid]
    for combo, det in zip(("L", "P", "both"), detection):
        assert _beta(_own(cy, tid, COMBO[combo]).detection) == det
    for row, (p, l, both) in success.items():
        for combo, exp in (("P", p), ("L", l), ("both", both)):
            assert _beta(_own(cy, tid, COMBO[combo]).success.lookup(_portfolio(row), ads.catalog)) == exp
    for row, expected in pnp.items():
        assert _pnp_row(t.pnp.lookup(_portfolio(row), ads.catalog)) == expected, row
    for row, expected in impact.items():
        assert _impact_row(t.impacts.lookup(_portfolio(row), ads.catalog)) == expected, row
    obj = _own(cy, tid, ("L",)).objective
    assert isinstance(obj, NotorietyObjective)
    assert _gamma(obj.financial) == ref.CY_FINANCIAL and obj.fatalities.rate == ref.CY_FATALITIES
    assert obj.vsl == ref.VSL
    for row, omegas in ref.CY_OMEGA.items():
        assert obj.omega.lookup(_portfolio(row), ads.catalog) == omegas[omega_col], row


def test_cyberterrorist_competitors(ads):
    others = [a for a in ads.attacker("Cy").actions if a.system != SELF]
    assert sorted((a.system, a.attack) for a in others) == sorted(
        itertools.product(("company2", "company3"), ("AML_at", "wir_jam")))
    for a in others:
        assert _beta(a.detection) == ref.CY_OTHER_DETECTION and _beta(a.success) == (1, 1)
        fin, fat = ref.CY_OTHER_GAIN[a.attack]
        assert _gamma(a.objective.financial) == fin and a.objective.fatalities.rate == fat
        assert a.objective.omega is None


def test_criminal_tables(ads):
    cr = ads.attacker("Cr")
    t = cr.attack_types["Cr_AML"]
    for combo, det in zip(("L", "P", "both"), ref.CR_AML_DETECTION):
        assert _beta(_own(cr, "Cr_AML", COMBO[combo]).detection) == det
    for row, (p, l, both) in ref.CR_AML_SUCCESS.items():
        for combo, exp in (("P", p), ("L", l), ("both", both)):
            assert _beta(_own(cr, "Cr_AML", COMBO[combo]).success.lookup(_portfolio(row), ads.catalog)) == exp
    for row, expected in ref.CR_AML_PNP.items():
        assert _pnp_row(t.pnp.lookup(_portfolio(row), ads.catalog)) == expected
    for row, expected in ref.CR_AML_IMPACT.items():
        assert _impact_row(t.impacts.lookup(_portfolio(row), ads.catalog)) == expected
    obj = _own(cr, "Cr_AML", ("P",)).objective
    assert isinstance(obj, SensitiveInfoObjective)
    assert (obj.record_value.lo, obj.record_value.hi) == ref.CR_RECORD_VALUE
    for row, n in ref.CR_MAX_RECORDS.items():
        assert obj.max_records.lookup(_portfolio(row), ads.catalog) == n
    others = [a for a in cr.actions if a.system != SELF]
    assert {a.system for a in others} == {"company2", "company3"}
    for a in others:
        assert _beta(a.detection) == ref.CR_OTHER_DETECTION and a.objective.max_records == ref.CR_OTHER_RECORDS


# ---------------------------------------------------------------- round trip and errors


def test_round_trip(ads, tmp_path):
    d = scenario_to_dict(ads)
    again = parse_scenario(copy.deepcopy(d))
    assert scenario_to_dict(again) == d
    path = tmp_path / "s.yaml"
    dump_scenario(ads, path)
    assert scenario_to_dict(load_scenario(path)) == d


def _raw():
    return yaml.safe_load(dump_scenario(builtin_scenario("ads")))


def _errors(data):
    with pytest.raises(ScenarioError) as exc:
        parse_scenario(data, "t.yaml")
    return exc.value.errors


def test_undeclared_combo_is_reported():
    d = _raw()
    d["attackers"][0]["attack_types"][0]["detection"]["D"] = [1, 1]
    errs = _errors(d)
    assert any("attackers[0].attack_types[0].detection" in e and "'D'" in e for e in errs)


def test_bad_gamma_and_multiple_errors_collected():
    d = _raw()
    d["attack_types"][0]["impacts"]["000"]["financial"] = [7, -3]
    del d["attack_types"][1]["pnp"]["111"]
    d["controls"][0]["icost"] = -5
    errs = _errors(d)
    assert len(errs) >= 3
    assert any("attack_types[0].impacts" in e and "financial" in e for e in errs)
    assert any("attack_types[1].pnp" in e and "111" in e for e in errs)
    assert any("controls[0]" in e for e in errs)


def test_dirichlet_length_mismatch_names_combos():
    d = _raw()
    d["attack_types"][0]["entrance"]["weights"] = {"dirichlet": [1, 1]}
    errs = _errors(d)
    assert any("entrance" in e and "P+L" in e for e in errs)


def test_yaml_syntax_error_has_line_and_column():
    with pytest.raises(ConfigurationError, match=r"bad\.yaml:2:8: YAML parse error"):
        loads_scenario("version: 1\nname: x: y\n", "bad.yaml")


def test_missing_file():
    with pytest.raises(ConfigurationError, match="nope.yaml"):
        load_scenario("/nonexistent/nope.yaml")


def test_unknown_builtin():
    with pytest.raises(ConfigurationError):
        builtin_scenario("nope")

"""Acceptance criteria for the ADS case study at M = V = 10 000 and the documented seed.

Each test prints one ``criterion N: PASS|FAIL`` line with the measured values
and tolerances.  Tolerances are written here, independently of the
``cyrisk reproduce`` table.
"""

import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest
from conftest import ACCEPTANCE_SEED

from cyrisk.model import enumerate_feasible, portfolio_cost
from cyrisk.reproduce import surrogate_battery, transit_battery
from cyrisk.risk.decision import default_rho_grid, optimize, sensitivity_rho
from cyrisk.risk.metrics import empirical_cvar, empirical_var

M = V = 10_000
RHO = 1e-7
SEEDS = [ACCEPTANCE_SEED + i for i in range(5)]
pytestmark = pytest.mark.slow
OPTIMAL = "011+A"        # insurance A, AML, PmVs
INITIAL = "000+A"
TOP3 = {"011+A", "110+B", "110+A"}


def report(capsys, n, ok, detail):
    with capsys.disabled():
        print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def within(x, target, rel):
    return abs(x - target) <= rel * abs(target)


@pytest.fixture(scope="module")
def runs(ads, ads_ranking):
    out, times = {ACCEPTANCE_SEED: ads_ranking}, []
    for s in SEEDS[1:]:
        t = time.perf_counter()
        out[s] = optimize(ads, rho=RHO, M=M, V=V, seed=s)
        times.append(time.perf_counter() - t)
    return out, max(times)


def test_criterion_1_feasibility(ads, capsys):
    t = time.perf_counter()
    feasible = enumerate_feasible(ads.space, ads.constraints, ads.insurance)
    dt = time.perf_counter() - t
    ok = len(feasible) == 12 and ads.space.size == 16 and dt < 1.0
    report(capsys, 1, ok, f"{len(feasible)} of {ads.space.size} feasible (want 12 of 16) in {dt:.3f}s (< 1s)")


def test_criterion_2_costs(ads, capsys):
    got = {k: portfolio_cost(ads.portfolio(k), ads.catalog, ads.insurance) for k in ("011+A", "110+B", "110+A")}
    want = {"011+A": 2300.0, "110+B": 2950.0, "110+A": 1800.0}
    report(capsys, 2, got == want, f"costs {got} (want {want}, exact)")


def test_criterion_3_optimal_identity(runs, capsys):
    res, slowest = runs
    top1 = [res[s].best.portfolio for s in SEEDS]
    ok = all(k == OPTIMAL for k in top1) and slowest <= 600
    report(capsys, 3, ok, f"top-1 over seeds {SEEDS}: {top1} (want {OPTIMAL} on all); "
                          f"slowest run {slowest:.1f}s (budget 600s)")


def test_criterion_4_top3_set(runs, capsys):
    res, _ = runs
    sets = [sorted(e.portfolio for e in res[s].ranking[:3]) for s in SEEDS]
    hits = sum(set(x) == TOP3 for x in sets)
    report(capsys, 4, hits >= 4, f"{hits} of 5 seeds give top-3 {sorted(TOP3)} (want >= 4); sets {sets}")


def test_criterion_5_initial_risk(ads_ranking, capsys):
    x = ads_ranking.samples[INITIAL]
    zero, var, cvar = float(np.mean(x == 0)), empirical_var(x, 0.95), empirical_cvar(x, 0.95)
    ok = zero == 0 and within(var, 1.32e6, 0.10) and within(cvar, 1.498e6, 0.10)
    report(capsys, 5, ok, f"{INITIAL}: zero-prob {zero} (want 0), VaR95 {var:,.0f} (1.32M +-10%), "
                          f"CVaR95 {cvar:,.0f} (1.498M +-10%)")


def test_criterion_6_optimal_risk(ads_ranking, capsys):
    x = ads_ranking.samples[OPTIMAL]
    zero, var, cvar, mean = float(np.mean(x == 0)), empirical_var(x, 0.95), empirical_cvar(x, 0.95), x.mean()
    ok = (abs(zero - 0.174) <= 0.03 and within(var, 59_520, 0.15) and within(cvar, 72_756, 0.15)
          and within(mean, 22_834.59, 0.15))
    report(capsys, 6, ok, f"{OPTIMAL}: zero-prob {zero:.4f} (0.174 +-0.03), VaR95 {var:,.0f} (59,520 +-15%), "
                          f"CVaR95 {cvar:,.0f} (72,756 +-15%), E[loss] {mean:,.0f} (22,835 +-15%)")


def test_criterion_7_sensitivity(ads, ads_ranking, capsys):
    grid = default_rho_grid(1e-7, 1e-3)
    sens = sensitivity_rho(ads, grid, samples=ads_ranking.samples)
    first = sens.rankings[0][:3]
    swaps = [r for r, keys in zip(sens.grid, sens.rankings)
             if r > 1e-4 and keys[0] == first[0] and keys[1:3] == [first[2], first[1]]]
    ok = sens.top1_invariant and bool(swaps)
    report(capsys, 7, ok, f"top-1 invariant {sens.top1_invariant} (want True); ranks 2-3 swapped above 1e-4 at "
                          f"{[f'{r:.2g}' for r in swaps] or 'no grid point'} (want at least one); "
                          f"top-3 at 1e-7 {first}, at 1e-3 {sens.rankings[-1][:3]}")


def test_criterion_8_transit_oracle(capsys):
    passed, n, worst = transit_battery(ACCEPTANCE_SEED)
    report(capsys, 8, passed == n and n >= 50,
           f"{passed}/{n} acyclic graphs (<= 6 blocks) match exact enumeration within 5 SE; worst |z| {worst:.2f}")


def test_criterion_9_surrogate_oracle(capsys):
    passed, n, worst = surrogate_battery(ACCEPTANCE_SEED)
    report(capsys, 9, passed == n and n >= 10,
           f"{passed}/{n} configurations match a 1e6-draw brute force within 3 SE; worst |z| {worst:.2f}")


PROPERTY_TESTS = [
    "test_metrics.py::test_var_le_cvar_le_max",
    "test_impact.py::test_insurance_never_increases_retained",
    "test_impact.py::test_no_compromise_no_loss",
    "test_stochastic.py::test_dirichlet_on_simplex",
    "test_ara.py::test_tau_simplex_and_laplace_gamma",
    "test_campaign.py::test_deterministic_and_worker_independent",
    "test_elicitation.py::test_mode_interpolation",
]


def test_criterion_10_property_suites(capsys):
    here = Path(__file__).parent
    proc = subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider",
                           *[str(here / t) for t in PROPERTY_TESTS]],
                          capture_output=True, text=True, cwd=here.parent)
    summary = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr[-300:]
    report(capsys, 10, proc.returncode == 0, f"{len(PROPERTY_TESTS)} property tests: {summary}")

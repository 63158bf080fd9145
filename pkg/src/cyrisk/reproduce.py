"""End-to-end case-study run with a pass/fail table against the reference results."""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field

import numpy as np

from .export import ResultBundle, loss_curve, targeting_entry
from .model import Block, Control, ControlCatalog, Portfolio, SystemGraph, enumerate_feasible, portfolio_cost
from .risk.decision import SurrogateModel, evaluate_portfolio_surrogate, optimize, sensitivity_rho
from .risk.elicitation import pnp_mode
from .risk.lossfit import fit_loss
from .risk.metrics import LossSample, empirical_cvar, empirical_var, risk_metrics
from .stochastic import PointMass, RngStream
from .transit import EntranceModel, Pnp, TransitBudget, simulate_transit_batch

__all__ = ["Criterion", "Reproduction", "run_reproduction", "INTERPRETATION_NOTES", "exact_block_probabilities"]

FULL_M = 10000
INITIAL, OPTIMAL = "000+A", "011+A"
TOP3 = {"011+A", "110+B", "110+A"}

INTERPRETATION_NOTES = [
    "expected loss = retained (after insurance) annual loss; portfolio cost is reported separately",
    "insurance covers a fixed share of its categories with no cap or deductible",
    "notoriety gain: omega scales gamma shape, gamma scale and the fatality rate",
    "downtime aggregates by max over compromised blocks, valued at 100 euros/hour",
    "each portfolio gets independent samples (no common random numbers across portfolios)",
    "the attacker's risk proneness is drawn once per draw and shared by all actions",
]


@dataclass
class Criterion:
    id: int
    title: str
    status: str          # pass | fail | insufficient
    detail: str

    @property
    def passed(self):
        return self.status == "pass"

    def line(self):
        return f"[{self.status.upper():>12}] {self.id:>2}. {self.title}: {self.detail}"


@dataclass
class Reproduction:
    criteria: list
    bundle: ResultBundle
    notes: list = field(default_factory=list)

    @property
    def ok(self):
        return all(c.passed for c in self.criteria)


def _within(x, target, rel):
    return abs(x - target) <= rel * abs(target)


def exact_block_probabilities(graph, combos, combo_weights, q_entry, q_edge):
    """Compromise probability per block for point-mass PNPs on an acyclic graph.

    Enumerates every success/failure pattern of the entry and edge trials; a
    block ends compromised when it is entered successfully or reached over a
    successful edge from a compromised block.
    """
    ids = graph.ids
    out = np.zeros(len(ids))
    edges = list(graph.edges)
    for combo, w in zip(combos, combo_weights):
        trials = [("entry", b) for b in combo] + [("edge", e) for e in edges]
        probs = [q_entry[b] for b in combo] + [q_edge[e] for e in edges]
        for bits in itertools.product((0, 1), repeat=len(trials)):
            p = w
            for b, q in zip(bits, probs):
                p *= q if b else 1.0 - q
            if p == 0.0:
                continue
            hit = {t[1] for t, b in zip(trials, bits) if b and t[0] == "entry"}
            open_edges = [t[1] for t, b in zip(trials, bits) if b and t[0] == "edge"]
            changed = True
            while changed:
                changed = False
                for s, d in open_edges:
                    if s in hit and d not in hit:
                        hit.add(d)
                        changed = True
            for i, b in enumerate(ids):
                if b in hit:
                    out[i] += p
    return out


def _random_dag(rng):
    nb = int(rng.integers(2, 7))
    levels = np.sort(rng.integers(1, 4, nb))
    levels = np.searchsorted(np.unique(levels), levels) + 1
    blocks = [Block(f"B{i}", level=int(levels[i]), entry_capable=bool(levels[i] == 1)) for i in range(nb)]
    edges = []
    for i in range(nb):
        for j in range(nb):
            if i == j:
                continue
            same = levels[j] == levels[i] and j > i
            down = levels[j] == levels[i] + 1
            if (same or down) and rng.random() < 0.5:
                edges.append((f"B{i}", f"B{j}"))
    return SystemGraph(tuple(blocks), tuple(edges))


def transit_battery(seed, n_cases=60, n_runs=20000):
    """Returns (cases passed, cases, worst z-score)."""
    rng = np.random.default_rng(seed)
    passed, worst = 0, 0.0
    for case in range(n_cases):
        g = _random_dag(rng)
        entries = g.entry_ids()
        combos = [tuple(entries)] + [(e,) for e in entries] if len(entries) > 1 else [tuple(entries)]
        w = rng.dirichlet(np.ones(len(combos)))
        q_entry = {b: float(rng.uniform(0.1, 0.9)) for b in entries}
        q_edge = {e: float(rng.uniform(0.1, 0.9)) for e in g.edges}
        exact = exact_block_probabilities(g, combos, w, q_entry, q_edge)
        ent = EntranceModel(tuple(combos), weights=PointMass(tuple(w)))
        pnp = Pnp({b: PointMass(q) for b, q in q_entry.items()}, {e: PointMass(q) for e, q in q_edge.items()})
        hit = simulate_transit_batch(g, ent, pnp, TransitBudget.default_for(g),
                                     RngStream(seed).child("battery", case), n_runs)
        freq = hit.mean(axis=0)
        se = np.sqrt(np.maximum(exact * (1 - exact), 1e-12) / n_runs)
        z = float(np.max(np.abs(freq - exact) / se))
        worst = max(worst, z)
        passed += z <= 5.0
    return passed, n_cases, worst


def surrogate_battery(seed, n_cases=10, n_brute=10**6, M=10**6):
    """Returns (cases passed, cases, worst z-score) for surrogate MC vs brute force."""
    rng = np.random.default_rng(seed)
    passed, worst = 0, 0.0
    for case in range(n_cases):
        k = int(rng.integers(1, 4))
        cat = ControlCatalog(tuple(Control(f"c{i}", icost=float(rng.uniform(0, 2000))) for i in range(k)))
        m = SurrogateModel(float(rng.uniform(0.2, 1.0)), float(rng.uniform(1e3, 2e4)), float(rng.uniform(0.5, 4)),
                           rng.uniform(0, 1.5, k), rng.uniform(0, 5e3, k))
        states = tuple(int(x) for x in rng.integers(0, 2, k))
        p = Portfolio(states)
        rho = float(10 ** rng.uniform(-7, -4.5))
        eu, se_mc = evaluate_portfolio_surrogate(m, p, cat, M, rho, RngStream(seed).child("surrogate", case))
        # brute force: explicit loop over controls, fresh generator, per-draw mixture choice
        s0, t = m.s0, m.t0
        ancost = 0.0
        for i, c in enumerate(cat):
            if states[i]:
                s0 *= np.exp(-m.alpha[i])
                t += m.beta[i]
                ancost += c.icost + c.mcost
        s = 1.0 - s0
        g = np.random.default_rng([seed, case, 7])
        zero = g.random(n_brute) < s
        loss = np.where(zero, 0.0, g.gamma(m.a, t, n_brute))
        u = 1.0 - np.exp(rho * (loss + ancost))
        se = np.hypot(se_mc, u.std(ddof=1) / np.sqrt(n_brute))
        z = abs(eu - u.mean()) / se
        worst = max(worst, z)
        passed += z <= 3.0
    return passed, n_cases, worst


def run_reproduction(scenario, M=None, V=None, seed=None, workers=1, n_seeds=5, log=print):
    d = scenario.defaults
    M = int(d["M"] if M is None else M)
    V = int(d["V"] if V is None else V)
    seed = int(d["seed"] if seed is None else seed)
    rho, level = float(d["rho"]), float(d["level"])
    enough = M >= FULL_M and V >= FULL_M
    stat = (lambda ok: "pass" if ok else "fail") if enough else (lambda ok: "insufficient")
    if not enough:
        log(f"warning: M={M}, V={V} is below {FULL_M}; statistical criteria are marked 'insufficient samples'")
    crit = []
    cat, ins = scenario.catalog, scenario.insurance

    t = time.perf_counter()
    feasible = enumerate_feasible(scenario.space, scenario.constraints, ins)
    dt = time.perf_counter() - t
    crit.append(Criterion(1, "feasible portfolios", "pass" if len(feasible) == 12 and dt < 1 else "fail",
                          f"{len(feasible)} of {scenario.space.size} (expected 12 of 16) in {dt:.3f}s"))

    costs = {k: portfolio_cost(scenario.portfolio(k), cat, ins) for k in ("011+A", "110+B", "110+A")}
    want = {"011+A": 2300.0, "110+B": 2950.0, "110+A": 1800.0}
    crit.append(Criterion(2, "portfolio costs", "pass" if costs == want else "fail",
                          ", ".join(f"{k}={v:g}" for k, v in costs.items()) + " (expected 2300, 2950, 1800)"))

    seeds = [seed + i for i in range(n_seeds)]
    runs = {}
    t = time.perf_counter()
    for s in seeds:
        runs[s] = optimize(scenario, rho=rho, M=M, V=V, seed=s, workers=workers)
        log(f"  seed {s}: top-3 {[e.portfolio for e in runs[s].ranking[:3]]}")
    dt = time.perf_counter() - t
    top1 = [runs[s].best.portfolio for s in seeds]
    ok3 = all(k == OPTIMAL for k in top1) and dt / n_seeds <= 600
    crit.append(Criterion(3, "optimal portfolio", stat(ok3),
                          f"top-1 per seed {top1} (expected {OPTIMAL}); {dt / n_seeds:.1f}s per run"))
    sets = [{e.portfolio for e in runs[s].ranking[:3]} == TOP3 for s in seeds]
    crit.append(Criterion(4, "top-3 set", stat(sum(sets) >= min(4, n_seeds)),
                          f"{sum(sets)} of {n_seeds} seeds match {sorted(TOP3)}"))

    main = runs[seed]
    bundle = ResultBundle(metadata={"scenario": scenario.name, "version": scenario.version, "seed": seed,
                                    "M": M, "V": V, "rho": rho, "level": level, "seeds": " ".join(map(str, seeds))})
    bundle.ranking = [e.as_dict() for e in main.ranking]
    reports = {}
    for key in (INITIAL, OPTIMAL):
        x = main.samples[key]
        sample = LossSample(x, scenario.name, key, seed)
        model = fit_loss(sample) if M >= 100 else None
        rep = risk_metrics(sample, model, level)
        reports[key] = rep
        bundle.reports.append(rep.as_dict())
        bundle.loss_curves[key] = loss_curve(x, model)

    r0 = reports[INITIAL]
    ok5 = r0.zero_prob[0] == 0 and _within(r0.var[0], 1.32e6, 0.10) and _within(r0.cvar[0], 1.498e6, 0.10)
    crit.append(Criterion(5, f"initial configuration {INITIAL}", stat(ok5),
                          f"zero-prob {r0.zero_prob[0]:.4f} (0), VaR {r0.var[0]:,.0f} (1,320,000 +-10%), "
                          f"CVaR {r0.cvar[0]:,.0f} (1,498,000 +-10%)"))
    r1 = reports[OPTIMAL]
    ok6 = (abs(r1.zero_prob[0] - 0.174) <= 0.03 and _within(r1.var[0], 59520, 0.15)
           and _within(r1.cvar[0], 72756, 0.15) and _within(r1.expected_loss[0], 22834.59, 0.15))
    crit.append(Criterion(6, f"optimal portfolio {OPTIMAL}", stat(ok6),
                          f"zero-prob {r1.zero_prob[0]:.4f} (0.174 +-0.03), VaR {r1.var[0]:,.0f} (59,520 +-15%), "
                          f"CVaR {r1.cvar[0]:,.0f} (72,756 +-15%), E[loss] {r1.expected_loss[0]:,.0f} (22,835 +-15%)"))

    sens = sensitivity_rho(scenario, M=M, seed=seed, samples=main.samples)
    base = sens.rankings[0][:3]
    swapped = [rho_ for rho_, r in zip(sens.grid, sens.rankings)
               if rho_ > 1e-4 and r[0] == base[0] and r[1] == base[2] and r[2] == base[1]]
    ok7 = sens.top1_invariant and bool(swapped)
    crit.append(Criterion(7, "risk-aversion sensitivity", stat(ok7),
                          f"top-1 invariant={sens.top1_invariant}; 2/3 swap above 1e-4 at "
                          f"{[f'{r:.2g}' for r in swapped] or 'none'}; ranking at 1e-3: {sens.rankings[-1][:3]}"))

    passed, n, worst = transit_battery(seed)
    crit.append(Criterion(8, "transit oracle", "pass" if passed == n and n >= 50 else "fail",
                          f"{passed}/{n} graphs within 5 SE (worst |z| = {worst:.2f})"))
    passed, n, worst = surrogate_battery(seed)
    crit.append(Criterion(9, "surrogate oracle", "pass" if passed == n and n >= 10 else "fail",
                          f"{passed}/{n} configurations within 3 SE (worst |z| = {worst:.2f})"))

    checks = []
    for key in (INITIAL, OPTIMAL):
        x = main.samples[key]
        checks.append(all(empirical_var(x, lv) <= empirical_cvar(x, lv) + 1e-9 for lv in (0.5, 0.9, 0.95, 0.99)))
    for est in main_targeting(scenario, seed, V).values():
        checks.append(np.isclose(est.tau.sum(), 1.0) and all(np.all(g >= 1) for g in est.gamma.values()))
    q_def = pnp_mode([(0.0, 0.99), (0.06, 0.93), (0.1, 0.85)], 0.06)
    q_none = pnp_mode([(0.0, 0.99), (0.06, 0.87), (0.1, 0.70)], 0.06)
    checks.append(abs(q_def - 0.07) < 1e-12 and abs(q_none - 0.13) < 1e-12)
    crit.append(Criterion(10, "property spot checks", "pass" if all(checks) else "fail",
                          f"{sum(checks)}/{len(checks)} (VaR<=CVaR, tau simplex, gamma>=1, curve readings "
                          f"q={q_def:.2f}/{q_none:.2f}); full suites run under pytest"))

    for key in (INITIAL, OPTIMAL):
        p = scenario.portfolio(key)
        for a, est in main_targeting(scenario, seed, V, p).items():
            bundle.targeting.append(targeting_entry(a, key, est))
    notes = INTERPRETATION_NOTES if not crit[4].passed else []
    return Reproduction(crit, bundle, list(notes))


def main_targeting(scenario, seed, V, portfolio=None):
    from .risk.campaign import estimate_all_targeting
    p = portfolio or scenario.portfolio(INITIAL)
    return estimate_all_targeting(scenario, p, V, seed)

"""Portfolio evaluation under CARA utility, optimisation and risk-aversion sensitivity.

Utilities ``1 - exp(rho * x)`` overflow for large ``rho * x``, so rankings
use the log-space key ``log E[exp(rho * total)]``: a smaller key means a
larger expected utility.  ``key / rho`` is the certainty equivalent in euros.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import logsumexp

from ..errors import ConfigurationError, NoFeasiblePortfolio
from ..model import DEFAULT_ENUMERATION_CAP, Portfolio, enumerate_feasible, is_feasible, portfolio_cost
from ..stochastic import RngStream
from .campaign import estimate_all_targeting, simulate_campaign

__all__ = [
    "cara_utility",
    "log_disutility",
    "PortfolioEvaluation",
    "utility_from_losses",
    "evaluate_portfolio_simulated",
    "SurrogateModel",
    "evaluate_portfolio_surrogate",
    "OptimizationResult",
    "optimize",
    "SensitivityResult",
    "sensitivity_rho",
]


def cara_utility(total_cost, rho):
    """``1 - exp(rho * total_cost)``; ``-inf`` once the exponential overflows."""
    if not rho > 0:
        raise ValueError("rho must be > 0")
    x = rho * np.asarray(total_cost, dtype=float)
    with np.errstate(over="ignore"):
        u = -np.expm1(x)
    return float(u) if u.ndim == 0 else u


def log_disutility(totals, rho):
    """``log E[exp(rho * total)]`` over a sample; monotone in ``-E[u]``."""
    x = rho * np.asarray(totals, dtype=float)
    return float(logsumexp(x) - np.log(x.size))


@dataclass
class PortfolioEvaluation:
    portfolio: str
    expected_loss: float
    expected_loss_se: float
    cost: float
    expected_utility: float
    utility_se: float
    log_key: float
    rho: float
    feasible: bool = True

    @property
    def certainty_equivalent(self):
        return self.log_key / self.rho

    def as_dict(self):
        return {
            "portfolio": self.portfolio,
            "expected_loss": self.expected_loss,
            "expected_loss_se": self.expected_loss_se,
            "cost": self.cost,
            "expected_utility": self.expected_utility,
            "utility_se": self.utility_se,
            "certainty_equivalent": self.certainty_equivalent,
        }


def utility_from_losses(key, losses, cost, rho):
    losses = np.asarray(losses, dtype=float)
    totals = losses + cost
    u = cara_utility(totals, rho)
    n = losses.size
    u_se = float("nan")
    if n > 1 and np.all(np.isfinite(u)):
        with np.errstate(over="ignore"):
            u_se = float(u.std(ddof=1) / np.sqrt(n))
    return PortfolioEvaluation(
        portfolio=key,
        expected_loss=float(losses.mean()),
        expected_loss_se=float(losses.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0,
        cost=float(cost),
        expected_utility=float(u.mean()),
        utility_se=u_se,
        log_key=log_disutility(totals, rho),
        rho=rho,
    )


def evaluate_portfolio_simulated(scenario, p: Portfolio, M, rho, seed, V=None, workers=1, targeting=None):
    """Expected loss, cost and expected CARA utility from a full campaign simulation.

    Returns ``(evaluation, campaign result)``.
    """
    cost = portfolio_cost(p, scenario.catalog, scenario.insurance)
    res = simulate_campaign(scenario, p, M, seed, V=V, workers=workers, targeting=targeting)
    return utility_from_losses(p.key, res.losses, cost, rho), res


@dataclass(frozen=True)
class SurrogateModel:
    """Zero-inflated gamma loss whose parameters move with the active controls.

    ``s(c) = 1 - s0 * exp(-sum alpha_i)`` is the zero-loss probability and
    ``t(c) = t0 + sum beta_i`` the gamma scale (shape ``a``), both summing over
    active controls.  ``alpha``/``beta`` are per-control arrays in catalog order.
    """

    s0: float
    t0: float
    a: float
    alpha: tuple
    beta: tuple

    def __post_init__(self):
        object.__setattr__(self, "alpha", tuple(float(x) for x in self.alpha))
        object.__setattr__(self, "beta", tuple(float(x) for x in self.beta))
        if not 0 < self.s0 <= 1:
            raise ConfigurationError("s0 must be in (0, 1]")
        if not (self.t0 > 0 and self.a > 0):
            raise ConfigurationError("t0 and a must be > 0")
        if len(self.alpha) != len(self.beta) or min(self.alpha + self.beta, default=0) < 0:
            raise ConfigurationError("alpha and beta must be equal-length and >= 0")

    @classmethod
    def from_scenario(cls, scenario):
        if scenario.surrogate is None:
            raise ConfigurationError(f"scenario {scenario.name!r} declares no surrogate")
        s = scenario.surrogate
        return cls(s.s0, s.t0, s.a, [c.alpha for c in scenario.catalog], [c.beta for c in scenario.catalog])

    def s(self, active):
        act = np.asarray(active, dtype=bool)
        return float(1.0 - self.s0 * np.exp(-np.sum(np.asarray(self.alpha)[act])))

    def t(self, active):
        act = np.asarray(active, dtype=bool)
        return float(self.t0 + np.sum(np.asarray(self.beta)[act]))


def evaluate_portfolio_surrogate(m: SurrogateModel, p: Portfolio, catalog, M, rho, stream: RngStream,
                                 insurance=None):
    """Monte Carlo expected utility under the surrogate loss, cost included.

    Per draw: with probability ``s`` the loss is 0, otherwise Gamma(a, t);
    the portfolio cost is added and ``1 - exp(rho * total)`` averaged.
    Returns ``(expected utility, standard error)``.
    """
    if len(m.alpha) != len(catalog):
        raise ConfigurationError("surrogate has a different number of controls than the catalog")
    s, t = m.s(p.active), m.t(p.active)
    ancost = portfolio_cost(p, catalog, insurance)
    rng = stream.generator()
    u = rng.random(M)
    g = rng.gamma(m.a, t, M)
    loss = np.where(u < s, 0.0, g)
    util = cara_utility(loss + ancost, rho)
    return float(util.mean()), float(util.std(ddof=1) / np.sqrt(M)) if M > 1 else 0.0


@dataclass
class OptimizationResult:
    ranking: list                    # PortfolioEvaluation, best first
    mode: str                        # "exhaustive" or "annealing"
    n_feasible: Optional[int] = None
    samples: dict = field(default_factory=dict)   # portfolio key -> losses (simulated evaluator)
    trace: list = field(default_factory=list)     # annealing: (step, current key, proposal key, accepted)

    @property
    def best(self):
        return self.ranking[0]


def _rank(evals):
    return sorted(evals, key=lambda e: (e.log_key, e.cost, e.portfolio))


class _Evaluator:
    """Caches evaluations; targeting estimates are shared between portfolios with equal controls."""

    def __init__(self, scenario, kind, rho, M, seed, V, workers, surrogate):
        self.scenario, self.kind, self.rho, self.M, self.seed = scenario, kind, rho, M, seed
        self.V = V if V is not None else int(scenario.defaults["V"])
        self.workers, self.cache, self.samples, self.targeting = workers, {}, {}, {}
        self.surrogate = surrogate
        if kind == "surrogate" and surrogate is None:
            self.surrogate = SurrogateModel.from_scenario(scenario)
        elif kind not in ("simulated", "surrogate"):
            raise ValueError(f"unknown evaluator {kind!r}")

    def __call__(self, p):
        if p.key in self.cache:
            return self.cache[p.key]
        s = self.scenario
        if self.kind == "surrogate":
            stream = RngStream(self.seed).child(p.key, "surrogate")
            cost = portfolio_cost(p, s.catalog, s.insurance)
            eu, se = evaluate_portfolio_surrogate(self.surrogate, p, s.catalog, self.M, self.rho, stream, s.insurance)
            # the key is only used for ordering: -E[u] preserves it (log of 1 - E[u])
            ev = PortfolioEvaluation(p.key, float("nan"), float("nan"), cost, eu, se,
                                     float(np.log1p(-eu)), self.rho)
        else:
            if p.control_key not in self.targeting:
                self.targeting[p.control_key] = estimate_all_targeting(s, p, self.V, self.seed)
            ev, res = evaluate_portfolio_simulated(s, p, self.M, self.rho, self.seed, workers=self.workers,
                                                   targeting=self.targeting[p.control_key])
            self.samples[p.key] = res.losses
        self.cache[p.key] = ev
        return ev


def optimize(scenario, constraints=None, evaluator="simulated", rho=None, M=None, seed=None, V=None,
             method="auto", cap=DEFAULT_ENUMERATION_CAP, n_steps=None, workers=1, surrogate=None,
             start=None):
    """Rank feasible portfolios by expected utility.

    ``method="auto"`` evaluates every feasible portfolio when the decision
    space is within ``cap`` and falls back to simulated annealing otherwise.
    Annealing proposes single control flips or insurance swaps, rejects
    infeasible proposals, and returns every feasible portfolio it evaluated.
    """
    d = scenario.defaults
    rho = float(d["rho"] if rho is None else rho)
    M = int(d["M"] if M is None else M)
    seed = int(d["seed"] if seed is None else seed)
    constraints = scenario.constraints if constraints is None else constraints
    space, catalog = scenario.space, scenario.catalog
    ev = _Evaluator(scenario, evaluator, rho, M, seed, V, workers, surrogate)
    if method == "auto":
        method = "exhaustive" if space.size <= cap else "annealing"

    if method == "exhaustive":
        feasible = enumerate_feasible(space, constraints, scenario.insurance, cap=max(cap, space.size))
        if not feasible:
            raise NoFeasiblePortfolio("no feasible portfolio satisfies the constraints")
        ranking = _rank([ev(p) for p in feasible])
        return OptimizationResult(ranking, "exhaustive", len(feasible), ev.samples)
    if method != "annealing":
        raise ValueError(f"unknown method {method!r}")
    return _anneal(scenario, constraints, ev, seed, n_steps, start)


def _feasible(scenario, constraints, p):
    return is_feasible(p, constraints, scenario.catalog, scenario.insurance).ok


def _anneal(scenario, constraints, ev, seed, n_steps, start):
    space = scenario.space
    rng = RngStream(seed).child("anneal").generator()
    if start is None:
        start = next((p for p in space if _feasible(scenario, constraints, p)), None)
        if start is None:
            # large spaces: random restarts before giving up
            free = space.free
            for _ in range(10000):
                states = [space.fixed_state(c.id) or 0 for c in scenario.catalog]
                for cid in free:
                    states[scenario.catalog.index(cid)] = int(rng.integers(2))
                ins = space.insurance_options[int(rng.integers(len(space.insurance_options)))]
                cand = Portfolio(tuple(states), ins)
                if _feasible(scenario, constraints, cand):
                    start = cand
                    break
    if start is None or not _feasible(scenario, constraints, start):
        raise NoFeasiblePortfolio("no feasible portfolio satisfies the constraints")
    n_steps = int(n_steps if n_steps is not None else 50 * min(space.size, 1000))
    cur = ev(start)
    cur_p = start
    scale = ev.rho if ev.kind == "simulated" else 1.0
    # initial temperature: a mean uphill move from the start is accepted with probability 0.8
    ups = [d for d in ((ev(q).log_key - cur.log_key) / scale for q in space.neighbours(start)
                       if _feasible(scenario, constraints, q)) if d > 0]
    t0 = (float(np.mean(ups)) if ups else abs(cur.log_key / scale) * 0.1 + 1e-12) / np.log(1 / 0.8)
    t_end = t0 * 1e-4
    trace = []
    for k in range(n_steps):
        temp = t0 * (t_end / t0) ** (k / max(n_steps - 1, 1))
        nbrs = space.neighbours(cur_p)
        prop = nbrs[int(rng.integers(len(nbrs)))]
        u = rng.random()
        if not _feasible(scenario, constraints, prop):
            trace.append((k, cur_p.key, prop.key, False))
            continue
        e = ev(prop)
        delta = (e.log_key - cur.log_key) / scale
        accept = delta <= 0 or u < np.exp(-delta / temp)
        trace.append((k, cur_p.key, prop.key, bool(accept)))
        if accept:
            cur, cur_p = e, prop
    ranking = _rank(list(ev.cache.values()))
    return OptimizationResult(ranking, "annealing", None, ev.samples, trace)


@dataclass
class SensitivityResult:
    grid: list
    rankings: list                  # per grid point: list of portfolio keys, best first
    evaluations: list               # per grid point: list of PortfolioEvaluation, best first
    first_change: Optional[float]   # first grid value whose ranking differs from the previous one
    top1_invariant: bool
    swaps: list                     # (rho, rank positions (1-based) that changed)

    def as_rows(self):
        rows = []
        for rho, evals in zip(self.grid, self.evaluations):
            for r, e in enumerate(evals, 1):
                rows.append({"rho": rho, "rank": r, **e.as_dict()})
        return rows


def default_rho_grid(lo=1e-7, hi=1e-3, per_decade=4):
    n = int(round(np.log10(hi / lo) * per_decade)) + 1
    return [float(x) for x in np.logspace(np.log10(lo), np.log10(hi), n)]


def sensitivity_rho(scenario, grid=None, M=None, seed=None, V=None, workers=1, samples=None, constraints=None):
    """Rankings over a risk-aversion grid from one set of loss samples.

    Losses do not depend on ``rho``, so each feasible portfolio is simulated
    once (or ``samples`` maps portfolio key to losses) and only the utility
    is recomputed per grid point.
    """
    grid = default_rho_grid() if grid is None else [float(r) for r in grid]
    if not grid:
        raise ValueError("rho grid must be non-empty")
    d = scenario.defaults
    M = int(d["M"] if M is None else M)
    seed = int(d["seed"] if seed is None else seed)
    constraints = scenario.constraints if constraints is None else constraints
    feasible = enumerate_feasible(scenario.space, constraints, scenario.insurance)
    if not feasible:
        raise NoFeasiblePortfolio("no feasible portfolio satisfies the constraints")
    if samples is None:
        ev = _Evaluator(scenario, "simulated", grid[0], M, seed, V, workers, None)
        for p in feasible:
            ev(p)
        samples = ev.samples
    costs = {p.key: portfolio_cost(p, scenario.catalog, scenario.insurance) for p in feasible}
    rankings, evaluations, swaps = [], [], []
    first_change = None
    for rho in grid:
        evals = _rank([utility_from_losses(p.key, samples[p.key], costs[p.key], rho) for p in feasible])
        keys = [e.portfolio for e in evals]
        if rankings and keys != rankings[-1]:
            changed = [i + 1 for i, (a, b) in enumerate(zip(keys, rankings[-1])) if a != b]
            swaps.append((rho, changed))
            if first_change is None:
                first_change = rho
        rankings.append(keys)
        evaluations.append(evals)
    top1 = len({r[0] for r in rankings}) == 1
    return SensitivityResult(grid, rankings, evaluations, first_change, top1, swaps)

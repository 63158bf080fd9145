"""Adversarial risk analysis of strategic attackers.

The defender does not know the attacker's utilities and beliefs, so they are
random.  Each Monte Carlo draw samples them for every action, the attacker
picks the action with the largest expected utility, and the argmax
frequencies give the targeting probabilities ``tau`` and the
Laplace-smoothed Dirichlet parameters ``gamma`` over entry combinations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .attack import AttackType, _any_per_iteration, _per_iteration, draw_counts, simulate_attacks
from .errors import ConfigurationError
from .model import PortfolioTable
from .stochastic import Beta, Dirichlet, DistSpec, Gamma, Poisson, RngStream, Uniform, categorical
from .transit import EntranceModel

__all__ = [
    "SELF",
    "NotorietyObjective",
    "SensitiveInfoObjective",
    "AttackerAction",
    "AttackerSpec",
    "TargetingEstimate",
    "log_random_expected_utility",
    "draw_random_expected_utility",
    "estimate_targeting",
    "simulate_targeted_campaign",
]

SELF = "self"


def _resolve(value, portfolio, catalog, what):
    if isinstance(value, PortfolioTable):
        return value.lookup(portfolio, catalog, what)
    return value


@dataclass(frozen=True)
class NotorietyObjective:
    """Notoriety in euros: financial damage (Keuros) plus fatalities times VSL.

    With an ``omega`` table the gamma shape and scale and the fatality rate
    are all multiplied by the portfolio's omega value.
    """

    financial: Gamma
    fatalities: Poisson
    vsl: float
    omega: Optional[PortfolioTable] = None

    def __post_init__(self):
        if self.vsl <= 0:
            raise ConfigurationError("VSL must be > 0")

    def at(self, portfolio=None, catalog=None):
        if self.omega is None:
            return self.financial, self.fatalities
        w = float(_resolve(self.omega, portfolio, catalog, "omega"))
        if w <= 0:
            raise ConfigurationError("omega values must be > 0")
        return Gamma(w * self.financial.shape, w * self.financial.scale), Poisson(w * self.fatalities.rate)

    def mean(self, portfolio=None, catalog=None):
        fin, fat = self.at(portfolio, catalog)
        return 1000.0 * fin.mean + fat.mean * self.vsl

    def draw(self, rng, n, portfolio=None, catalog=None):
        fin, fat = self.at(portfolio, catalog)
        return 1000.0 * fin.sample(rng, n) + fat.sample(rng, n) * self.vsl


@dataclass(frozen=True)
class SensitiveInfoObjective:
    """Resale value of stolen records: ``U(0, max_records) * record_value``."""

    record_value: Uniform
    max_records: Union[float, PortfolioTable]

    def mean(self, portfolio=None, catalog=None):
        ft = float(_resolve(self.max_records, portfolio, catalog, "max_records"))
        return 0.5 * ft * self.record_value.mean

    def draw(self, rng, n, portfolio=None, catalog=None):
        ft = float(_resolve(self.max_records, portfolio, catalog, "max_records"))
        return rng.uniform(0.0, ft, n) * self.record_value.sample(rng, n)


@dataclass(frozen=True)
class AttackerAction:
    """Attack ``attack`` on ``system`` (``"self"`` = the defended system, through ``combo``)."""

    system: str
    attack: str
    detection: DistSpec
    success: Union[DistSpec, PortfolioTable]
    objective: Union[NotorietyObjective, SensitiveInfoObjective]
    combo: Optional[tuple] = None

    def __post_init__(self):
        if self.combo is not None:
            object.__setattr__(self, "combo", tuple(self.combo))
        if (self.system == SELF) != (self.combo is not None):
            raise ConfigurationError("actions on our system need an entry combo; others must not have one")

    @property
    def label(self):
        if self.system == SELF:
            return f"{self.attack}@{'+'.join(self.combo)}"
        return f"{self.attack}@{self.system}"


@dataclass(frozen=True)
class AttackerSpec:
    id: str
    actions: tuple
    arrival: DistSpec
    risk_proneness: DistSpec
    detection_cost: DistSpec
    attack_types: dict = field(default_factory=dict)
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "actions", tuple(self.actions))
        if not self.actions:
            raise ConfigurationError(f"attacker {self.id!r} has no actions")
        for a in self.actions:
            if a.system == SELF and a.attack not in self.attack_types:
                raise ConfigurationError(f"attacker {self.id!r}: unknown attack type {a.attack!r}")

    @property
    def targets(self):
        """Targeting categories: our-system attack types, then other systems."""
        own, others = [], []
        for a in self.actions:
            bucket = own if a.system == SELF else others
            key = a.attack if a.system == SELF else a.system
            if key not in bucket:
                bucket.append(key)
        return [(SELF, j) for j in own] + [(s, None) for s in others]

    def combos(self, attack):
        return tuple(a.combo for a in self.actions if a.system == SELF and a.attack == attack)


@dataclass(frozen=True)
class TargetingEstimate:
    targets: tuple          # ((system, attack type or None), ...)
    tau: np.ndarray         # simplex over targets
    gamma: dict             # attack type -> Dirichlet parameters over its combos
    combos: dict            # attack type -> combos, aligned with gamma
    action_labels: tuple
    action_freq: np.ndarray
    n_draws: int

    def tau_for(self, system, attack=None):
        return float(self.tau[self.targets.index((system, attack))])


def log_random_expected_utility(action: AttackerAction, spec: AttackerSpec, portfolio, catalog,
                                rng, n, h=None):
    """``n`` draws of log Psi_A for one action (log space keeps exp(H*Pi) finite)."""
    if h is None:
        h = np.asarray(spec.risk_proneness.sample(rng, n), dtype=float)
    success = _resolve(action.success, portfolio, catalog, f"{spec.id} success for {action.label}")
    p = np.clip(success.sample(rng, n), 0.0, 1.0)
    c_d = action.detection.sample(rng, n) * spec.detection_cost.sample(rng, n)
    gain = action.objective.draw(rng, n, portfolio, catalog)
    with np.errstate(divide="ignore"):
        return -h * c_d + np.logaddexp(np.log(p) + h * gain, np.log1p(-p))


def draw_random_expected_utility(action: AttackerAction, spec: AttackerSpec, portfolio, catalog,
                                 stream: RngStream, size=None):
    """One draw (or ``size`` draws) of the attacker's random expected utility."""
    n = 1 if size is None else size
    v = np.exp(log_random_expected_utility(action, spec, portfolio, catalog, stream.generator(), n))
    return float(v[0]) if size is None else v


def estimate_targeting(spec: AttackerSpec, portfolio, catalog, n_draws: int, stream: RngStream):
    """Argmax frequencies of the attacker's random expected utilities over ``n_draws`` draws.

    The risk proneness is drawn once per draw and shared by all actions;
    success, detection and gain are drawn per action.  Ties go to the lowest
    action index.
    """
    if n_draws < 1:
        raise ValueError("n_draws must be >= 1")
    h = np.asarray(spec.risk_proneness.sample(stream.child("risk_proneness").generator(), n_draws), dtype=float)
    logpsi = np.column_stack([
        log_random_expected_utility(a, spec, portfolio, catalog,
                                    stream.child("action", i).generator(), n_draws, h)
        for i, a in enumerate(spec.actions)
    ])
    choice = np.argmax(logpsi, axis=1)
    counts = np.bincount(choice, minlength=len(spec.actions))

    targets = spec.targets
    tau = np.zeros(len(targets))
    for i, a in enumerate(spec.actions):
        key = (SELF, a.attack) if a.system == SELF else (a.system, None)
        tau[targets.index(key)] += counts[i]
    tau /= n_draws
    gamma, combos = {}, {}
    for system, attack in targets:
        if system != SELF:
            continue
        idx = [i for i, a in enumerate(spec.actions) if a.system == SELF and a.attack == attack]
        gamma[attack] = counts[idx].astype(float) + 1.0
        combos[attack] = tuple(spec.actions[i].combo for i in idx)
    return TargetingEstimate(tuple(targets), tau, gamma, combos,
                             tuple(a.label for a in spec.actions), counts / n_draws, n_draws)


def simulate_targeted_campaign(spec: AttackerSpec, est: TargetingEstimate, graph, portfolio, catalog,
                               categories, insurance, n_iter: int, stream: RngStream, weights=None):
    """Annual losses from one strategic attacker over ``n_iter`` iterations.

    Each attack picks its target from ``tau``; attacks on other systems cost
    us nothing, attacks on ours draw entry weights from ``Dirichlet(gamma)``
    and run transit and impacts with the attack type's tables.
    """
    counts = draw_counts(spec.arrival, n_iter, stream.child("arrival"))
    owner = np.repeat(np.arange(n_iter), counts)
    target = categorical(stream.child("target").generator(), np.broadcast_to(est.tau, (owner.size, est.tau.size)))
    losses = np.zeros(n_iter)
    retained = np.zeros((n_iter, len(categories)))
    hits = np.zeros((n_iter, len(graph.blocks)), dtype=bool)
    for t, (system, attack) in enumerate(est.targets):
        if system != SELF:
            continue
        sel = target == t
        if not sel.any():
            continue
        atype: AttackType = spec.attack_types[attack]
        entrance = EntranceModel(est.combos[attack], weights=Dirichlet(tuple(est.gamma[attack])))
        batch = simulate_attacks(graph, atype, portfolio, catalog, categories, insurance, entrance,
                                 int(sel.sum()), stream.child("attacks", attack), weights)
        losses += _per_iteration(batch.loss, owner[sel], n_iter)
        retained += _per_iteration(batch.retained, owner[sel], n_iter)
        hits |= _any_per_iteration(batch.hit, owner[sel], n_iter)
    return losses, retained, hits

"""Attack types and the per-attack simulation shared by untargeted and targeted campaigns."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .impact import simulate_impact_batch
from .model import PortfolioTable
from .stochastic import DistSpec, RngStream
from .transit import EntranceModel, TransitBudget, simulate_transit_batch

__all__ = ["AttackType", "AttackBatch", "simulate_attacks", "simulate_untargeted"]


@dataclass(frozen=True)
class AttackType:
    """One attack type: portfolio-conditional PNPs and impacts.

    Untargeted types also carry an ``arrival`` count distribution (per
    horizon) and an ``entrance`` model.  Types used by a strategic attacker
    leave both unset; their entry weights come from the targeting estimate
    over ``combos``.
    """

    id: str
    pnp: PortfolioTable
    impacts: PortfolioTable
    arrival: Optional[DistSpec] = None
    entrance: Optional[EntranceModel] = None
    combos: tuple = ()
    budget: Optional[TransitBudget] = None
    name: str = ""

    @property
    def targeted(self):
        return self.entrance is None


class AttackBatch(NamedTuple):
    loss: np.ndarray       # (n,) euros
    hit: np.ndarray        # (n, blocks) bool
    retained: np.ndarray   # (n, categories) euros


def simulate_attacks(graph, atype: AttackType, portfolio, catalog, categories, insurance,
                     entrance: EntranceModel, n: int, stream: RngStream, weights=None):
    """Transit plus impact for ``n`` attacks of ``atype`` against ``portfolio``."""
    pnp = atype.pnp.lookup(portfolio, catalog, f"{atype.id} PNP")
    impacts = atype.impacts.lookup(portfolio, catalog, f"{atype.id} impacts")
    budget = atype.budget or TransitBudget.default_for(graph)
    ins = insurance.get(portfolio.insurance) if (insurance and portfolio.insurance) else None
    hit = simulate_transit_batch(graph, entrance, pnp, budget, stream, n)
    where = f"{atype.id} impacts at {atype.impacts.key_for(portfolio, catalog)}"
    res = simulate_impact_batch(hit, graph, impacts, categories, ins, weights,
                                stream.child("impact"), where)
    return AttackBatch(res.loss, hit, res.retained)


def _per_iteration(values, owner, n_iter):
    if values.ndim == 1:
        return np.bincount(owner, weights=values, minlength=n_iter)
    if values.shape[1] == 0:
        return np.zeros((n_iter, 0))
    return np.stack([np.bincount(owner, weights=values[:, c], minlength=n_iter)
                     for c in range(values.shape[1])], axis=1)


def _any_per_iteration(hit, owner, n_iter):
    out = np.zeros((n_iter, hit.shape[1]), dtype=bool)
    for j in range(hit.shape[1]):
        out[owner[hit[:, j]], j] = True
    return out


def draw_counts(dist: DistSpec, n_iter, stream: RngStream):
    counts = np.asarray(dist.sample(stream.generator(), n_iter))
    return np.rint(counts).astype(np.int64).reshape(n_iter)


def simulate_untargeted(graph, atype: AttackType, portfolio, catalog, categories, insurance,
                        n_iter: int, stream: RngStream, weights=None):
    """Annual losses over ``n_iter`` iterations for one untargeted attack type.

    Returns ``(losses, retained per category, blocks hit per iteration)``.
    """
    counts = draw_counts(atype.arrival, n_iter, stream.child("arrival"))
    owner = np.repeat(np.arange(n_iter), counts)
    batch = simulate_attacks(graph, atype, portfolio, catalog, categories, insurance,
                             atype.entrance, int(counts.sum()), stream.child("attacks", atype.id), weights)
    return (_per_iteration(batch.loss, owner, n_iter),
            _per_iteration(batch.retained, owner, n_iter),
            _any_per_iteration(batch.hit, owner, n_iter))

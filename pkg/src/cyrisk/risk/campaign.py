"""Annual-loss campaigns: every untargeted attack type plus every strategic attacker.

Iterations are split into fixed chunks of :data:`CHUNK` and each (source,
chunk) pair draws from its own stream ``seed / portfolio / "campaign" /
source / chunk``.  Results therefore do not depend on how many workers run
the chunks or in which order.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..ara import estimate_targeting, simulate_targeted_campaign
from ..attack import simulate_untargeted
from ..model import Portfolio
from ..stochastic import RngStream
from .metrics import LossSample

__all__ = ["CHUNK", "CampaignResult", "simulate_campaign", "estimate_all_targeting"]

CHUNK = 1000


@dataclass
class CampaignResult:
    sample: LossSample
    by_source: dict                 # source id -> (M,) losses
    retained: np.ndarray            # (M, categories) euros
    block_hits: np.ndarray          # (M, blocks) bool: block compromised at least once that year
    targeting: dict = field(default_factory=dict)

    @property
    def losses(self):
        return self.sample.losses

    def block_frequencies(self, graph):
        return {b: float(f) for b, f in zip(graph.ids, self.block_hits.mean(axis=0))}

    def source_means(self):
        return {k: float(v.mean()) for k, v in self.by_source.items()}


def estimate_all_targeting(scenario, portfolio: Portfolio, V: int, seed: int):
    """Targeting estimates for every attacker.  The attacker does not see insurance,
    so the stream depends on the control states only."""
    base = RngStream(seed)
    return {a.id: estimate_targeting(a, portfolio, scenario.catalog, V,
                                     base.child(portfolio.control_key, "targeting", a.id))
            for a in scenario.attackers}


def _run_chunk(args):
    scenario, portfolio, source, chunk, n, seed, est = args
    stream = RngStream(seed).child(portfolio.key, "campaign", source, chunk)
    common = (portfolio, scenario.catalog, scenario.categories, scenario.insurance)
    for at in scenario.attack_types:
        if at.id == source:
            return simulate_untargeted(scenario.graph, at, *common, n, stream, scenario.weights)
    spec = scenario.attacker(source)
    return simulate_targeted_campaign(spec, est, scenario.graph, *common, n, stream, scenario.weights)


def simulate_campaign(scenario, portfolio: Portfolio, M: int, seed: int, V=None, workers=1,
                      targeting=None):
    """``M`` annual losses (retained, in euros, portfolio cost excluded).

    ``targeting`` may carry precomputed estimates per attacker id; otherwise
    they are estimated with ``V`` draws.
    """
    if M < 1:
        raise ValueError("M must be >= 1")
    V = int(scenario.defaults["V"] if V is None else V)
    if targeting is None:
        targeting = estimate_all_targeting(scenario, portfolio, V, seed) if scenario.attackers else {}
    sources = [a.id for a in scenario.attack_types] + [a.id for a in scenario.attackers]
    tasks = []
    for src in sources:
        for c, start in enumerate(range(0, M, CHUNK)):
            tasks.append((scenario, portfolio, src, c, min(CHUNK, M - start), seed, targeting.get(src)))
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_chunk, tasks))
    else:
        results = [_run_chunk(t) for t in tasks]

    by_source = {}
    nc, nb = len(scenario.categories), len(scenario.graph.blocks)
    retained = np.zeros((M, nc))
    hits = np.zeros((M, nb), dtype=bool)
    it = iter(results)
    for src in sources:
        parts = [next(it) for _ in range(0, M, CHUNK)]
        by_source[src] = np.concatenate([p[0] for p in parts])
        retained += np.concatenate([p[1] for p in parts])
        hits |= np.concatenate([p[2] for p in parts])
    total = np.zeros(M)
    for v in by_source.values():
        total = total + v
    sample = LossSample(total, scenario.name, portfolio.key, seed)
    return CampaignResult(sample, by_source, retained, hits, dict(targeting))

"""Attack entry and propagation through a leveled system graph.

The batch routine simulates ``n`` independent attacks at once.  Uniform draws
are consumed in a fixed order that does not depend on the simulated state, so
two runs on the same stream are coupled: raising a PNP can only turn more
attempts into successes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigurationError
from .stochastic import DistSpec, PointMass, RngStream, categorical

__all__ = [
    "EntranceModel",
    "Pnp",
    "TransitBudget",
    "simulate_transit",
    "simulate_transit_batch",
    "estimate_block_probabilities",
]


@dataclass(frozen=True)
class EntranceModel:
    """Distribution over entry-block combinations.

    ``weights`` is a Dirichlet (or point-mass vector) over ``combos``.  With
    ``generic`` set instead, the combos are ``[all entries, each single
    entry]`` and the weight of the all-entries combo is drawn from ``generic``.
    """

    combos: tuple
    weights: Optional[DistSpec] = None
    generic: Optional[DistSpec] = None

    def __post_init__(self):
        object.__setattr__(self, "combos", tuple(tuple(c) for c in self.combos))
        if (self.weights is None) == (self.generic is None):
            raise ConfigurationError("entrance model needs exactly one of weights / generic")
        if len(set(frozenset(c) for c in self.combos)) != len(self.combos):
            raise ConfigurationError("entry combos must be distinct")
        if any(not c for c in self.combos):
            raise ConfigurationError("entry combos must be non-empty")
        if self.weights is not None and len(self.weights) != len(self.combos):
            raise ConfigurationError(
                f"entrance weights have {len(self.weights)} components for {len(self.combos)} combos"
            )
        if self.generic is not None:
            singles = self.combos[1:]
            if any(len(c) != 1 for c in singles) or set(self.combos[0]) != {c[0] for c in singles}:
                raise ConfigurationError("generic entrance combos must be [all entries, each single entry]")

    @classmethod
    def generic_vs_targeted(cls, entries, generic: DistSpec):
        entries = tuple(entries)
        return cls((entries, *((e,) for e in entries)), generic=generic)

    @property
    def blocks(self):
        return sorted({b for c in self.combos for b in c})

    def draw_weights(self, rng, n):
        if self.weights is not None:
            w = np.asarray(self.weights.sample(rng, n), dtype=float)
            return w.reshape(n, len(self.combos))
        g = np.asarray(self.generic.sample(rng, n), dtype=float)
        k = len(self.combos) - 1
        return np.column_stack([g, *([(1.0 - g) / k] * k)])


@dataclass(frozen=True)
class Pnp:
    """Probabilities of not protecting, for one portfolio.

    ``entry`` maps block id to the PNP of an external attack on it; ``edges``
    maps ``(from, to)`` to the PNP of the target block from its predecessor.
    """

    entry: dict
    edges: dict = field(default_factory=dict)


@dataclass(frozen=True)
class TransitBudget:
    """Number of sweeps per level (N'): ``acyclic`` = 1, ``global`` or ``per_edge`` drawn."""

    mode: str = "acyclic"
    dist: Optional[DistSpec] = None
    edge_dists: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in ("acyclic", "global", "per_edge"):
            raise ConfigurationError(f"unknown transit budget mode {self.mode!r}")
        if self.mode == "global" and self.dist is None:
            raise ConfigurationError("global transit budget needs a distribution")

    @classmethod
    def default_for(cls, graph):
        if graph.cyclic_levels():
            return cls("global", PointMass(3))
        return cls("acyclic")

    def draw(self, rng, n, edges):
        """Sweep counts as an ``(n, n_edges)`` int array (every value >= 1)."""
        if self.mode == "acyclic":
            return np.ones((n, len(edges)), dtype=int)
        if self.mode == "global":
            s = np.asarray(self.dist.sample(rng, n)).astype(int)
            return np.repeat(np.maximum(s, 1)[:, None], len(edges), axis=1)
        cols = []
        for e in edges:
            d = self.edge_dists.get(e, self.dist)
            if d is None:
                raise ConfigurationError(f"no transit budget for edge {e[0]}->{e[1]}")
            cols.append(np.maximum(np.asarray(d.sample(rng, n)).astype(int), 1))
        return np.column_stack(cols) if cols else np.ones((n, 0), dtype=int)


def _check_pnp(graph, entrance, pnp):
    for b in entrance.blocks:
        if b not in pnp.entry:
            raise ConfigurationError(f"no entry PNP for block {b!r}")
        if not graph.blocks[graph.index(b)].entry_capable:
            raise ConfigurationError(f"block {b!r} is not entry-capable")
    for e in graph.edges:
        if e not in pnp.edges:
            raise ConfigurationError(f"no PNP for edge {e[0]}->{e[1]}")


def _draw_q(dist, rng, n):
    q = np.asarray(dist.sample(rng, n), dtype=float).reshape(n)
    return np.clip(q, 0.0, 1.0)


def simulate_transit_batch(graph, entrance: EntranceModel, pnp: Pnp, budget: TransitBudget,
                           stream: RngStream, n: int, trace=None):
    """Simulate ``n`` attacks; returns an ``(n, n_blocks)`` boolean compromise matrix.

    Draw sites: ``entry`` (weights and chosen combo), ``pnp`` (per-attack
    PNP values) and ``transit`` (Bernoulli success draws).
    """
    _check_pnp(graph, entrance, pnp)
    nb = len(graph.blocks)
    ids = graph.ids
    pos = {b: i for i, b in enumerate(ids)}

    rng = stream.child("entry").generator()
    weights = entrance.draw_weights(rng, n)
    combo = categorical(rng, weights)
    combo_mask = np.zeros((len(entrance.combos), nb), dtype=bool)
    for k, c in enumerate(entrance.combos):
        combo_mask[k, [pos[b] for b in c]] = True
    entered = combo_mask[combo]

    rng = stream.child("pnp").generator()
    q_entry = np.zeros((n, nb))
    for b in ids:
        if b in pnp.entry:
            q_entry[:, pos[b]] = _draw_q(pnp.entry[b], rng, n)
    edges = graph.edges
    q_edge = np.column_stack([_draw_q(pnp.edges[e], rng, n) for e in edges]) if edges else np.zeros((n, 0))

    rng = stream.child("transit").generator()
    sweeps = budget.draw(rng, n, edges)
    hit = entered & (rng.random((n, nb)) < q_entry)
    if trace is not None:
        trace.extend(("entry", ids[j]) for j in range(nb) if entered[:, j].any())

    out_edges = {j: [(m, pos[e[1]]) for m, e in enumerate(edges) if e[0] == ids[j]] for j in range(nb)}
    for h in range(1, graph.k + 1):
        members = graph.level_order(h)
        level_edges = [m for j in members for m, _ in out_edges[j]]
        if not level_edges or n == 0:
            continue
        n_sweeps = int(sweeps[:, level_edges].max())
        for u in range(n_sweeps):
            for j in members:
                for m, i in out_edges[j]:
                    ok = rng.random(n) < q_edge[:, m]
                    attempt = hit[:, j] & ~hit[:, i] & (sweeps[:, m] > u)
                    if trace is not None and attempt.any():
                        trace.append(("edge", edges[m]))
                    hit[:, i] |= attempt & ok
    return hit


def simulate_transit(graph, entrance: EntranceModel, pnp: Pnp, budget: TransitBudget,
                     stream: RngStream, trace=None):
    """One attack: indicator vector over blocks (1 = compromised)."""
    return simulate_transit_batch(graph, entrance, pnp, budget, stream, 1, trace)[0].astype(int)


def estimate_block_probabilities(runs):
    """Per-block compromise frequency over indicator vectors, with standard errors."""
    I = np.asarray(runs, dtype=float)
    if I.ndim != 2 or I.shape[0] == 0:
        raise ValueError("need a non-empty list of indicator vectors")
    freq = I.mean(axis=0)
    se = np.sqrt(freq * (1.0 - freq) / I.shape[0])
    return freq, se

"""Impacts of one attack given its compromise indicators: draw, aggregate, insure, monetise."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ConfigurationError
from .stochastic import RngStream

__all__ = ["ImpactCategory", "ImpactEntry", "ImpactResult", "simulate_impact", "simulate_impact_batch"]

_UNIT_FACTOR = {"euros": 1.0, "keuros": 1000.0}


@dataclass(frozen=True)
class ImpactCategory:
    """An impact dimension.

    ``global`` categories get one draw per attack; ``separable`` ones get a
    draw per compromised block, combined with ``aggregation`` (``sum`` or
    ``max``).  Values are converted to euros with ``rate`` (for ``hours``) or
    the fixed unit factor.
    """

    id: str
    name: str = ""
    scope: str = "global"
    unit: str = "euros"
    aggregation: str = "sum"
    rate: float = 1.0

    def __post_init__(self):
        if self.scope not in ("global", "separable"):
            raise ConfigurationError(f"category {self.id!r}: scope must be global or separable")
        if self.aggregation not in ("sum", "max"):
            raise ConfigurationError(f"category {self.id!r}: aggregation must be sum or max")
        if self.unit not in ("euros", "keuros", "hours"):
            raise ConfigurationError(f"category {self.id!r}: unit must be euros, keuros or hours")
        if self.rate < 0:
            raise ConfigurationError(f"category {self.id!r}: rate must be >= 0")

    @property
    def to_euros(self):
        return self.rate if self.unit == "hours" else _UNIT_FACTOR[self.unit]


class ImpactEntry(dict):
    """Impact distributions for one (attack type, portfolio).

    Maps category id to a distribution (global categories) or to a
    ``{block id: distribution}`` mapping (separable ones).  Categories that
    are absent do not apply to the attack type.
    """


class ImpactResult(NamedTuple):
    loss: np.ndarray
    retained: np.ndarray
    gross: np.ndarray


def simulate_impact_batch(hit, graph, entry: ImpactEntry, categories, insurance=None,
                          weights=None, stream: RngStream = None, where="impact"):
    """Monetised, insured losses for a batch of compromise matrices ``hit`` (n, blocks).

    Attacks with no compromised block lose exactly zero.  Returns the weighted
    loss plus per-category retained and gross euro amounts (n, categories).
    """
    hit = np.asarray(hit, dtype=bool)
    n, nb = hit.shape
    rng = stream.generator()
    any_hit = hit.any(axis=1)
    gross = np.zeros((n, len(categories)))
    for c, cat in enumerate(categories):
        spec = entry.get(cat.id)
        if spec is None:
            continue
        if cat.scope == "global":
            if isinstance(spec, dict):
                raise ConfigurationError(f"{where}: category {cat.id!r} is global but keyed by block")
            value = np.asarray(spec.sample(rng, n), dtype=float)
        else:
            if not isinstance(spec, dict):
                raise ConfigurationError(f"{where}: category {cat.id!r} is separable and needs per-block entries")
            draws = np.zeros((n, nb))
            for j, b in enumerate(graph.ids):
                if b in spec:
                    draws[:, j] = spec[b].sample(rng, n)
                elif hit[:, j].any():
                    raise ConfigurationError(f"{where}: no {cat.id!r} distribution for block {b!r}")
            draws = np.where(hit, draws, 0.0)
            value = draws.sum(axis=1) if cat.aggregation == "sum" else draws.max(axis=1)
        gross[:, c] = np.where(any_hit, value, 0.0) * cat.to_euros
    covered = np.array([insurance.covered_fraction.get(cat.id, 0.0) if insurance else 0.0
                        for cat in categories])
    retained = gross * (1.0 - covered)
    w = np.ones(len(categories)) if weights is None else np.array(
        [weights.get(cat.id, 1.0) for cat in categories] if isinstance(weights, dict) else weights, dtype=float
    )
    return ImpactResult(retained @ w, retained, gross)


def simulate_impact(I, graph, entry: ImpactEntry, categories, insurance=None, weights=None,
                    stream: RngStream = None):
    """Single-attack version; returns ``(loss in euros, {category id: retained euros})``."""
    res = simulate_impact_batch(np.asarray(I, dtype=bool)[None, :], graph, entry, categories,
                                insurance, weights, stream)
    return float(res.loss[0]), {cat.id: float(res.retained[0, c]) for c, cat in enumerate(categories)}

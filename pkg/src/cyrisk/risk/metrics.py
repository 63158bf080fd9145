"""Loss samples, VaR / CVaR and the risk report."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .lossfit import ZeroInflatedGammaMixture, check_losses

__all__ = ["LossSample", "RiskReport", "empirical_var", "empirical_cvar", "risk_metrics"]


@dataclass(frozen=True)
class LossSample:
    losses: np.ndarray
    scenario: str = ""
    portfolio: str = ""
    seed: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "losses", check_losses(self.losses))

    @property
    def M(self):
        return self.losses.size


def empirical_var(x, level):
    """Level-quantile with linear interpolation between order statistics."""
    return float(np.quantile(np.asarray(x, dtype=float), level))


def empirical_cvar(x, level):
    """Average of the worst ``1 - level`` share of the sample.

    Computed as ``q + mean((x - q)+) / (1 - level)`` at the lower quantile
    ``q = inf{x : F(x) >= level}``, which minimises that expression, so the
    result is the exact tail average (an atom at ``q`` counts fractionally)
    and never exceeds the largest loss.
    """
    x = np.asarray(x, dtype=float)
    q = float(np.quantile(x, level, method="inverted_cdf"))
    return float(q + np.maximum(x - q, 0.0).mean() / (1.0 - level))


def _bootstrap_se(x, level, n_boot=200, seed=0):
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, x.size, size=(n_boot, x.size))
    q = np.quantile(x[idx], level, axis=1)
    low = np.quantile(x[idx], level, axis=1, method="inverted_cdf")
    tail = low + np.maximum(x[idx] - low[:, None], 0.0).mean(axis=1) / (1.0 - level)
    return float(q.std(ddof=1)), float(tail.std(ddof=1))


@dataclass
class RiskReport:
    """Each metric is an ``(empirical, fitted)`` pair; ``*_se`` are empirical standard errors."""

    level: float
    M: int
    expected_loss: tuple
    zero_prob: tuple
    var: tuple
    cvar: tuple
    expected_loss_se: float = 0.0
    var_se: float = 0.0
    cvar_se: float = 0.0
    n_components: int = 0
    block_frequencies: dict = field(default_factory=dict)
    by_source: dict = field(default_factory=dict)
    portfolio: str = ""

    def as_dict(self):
        return {
            "portfolio": self.portfolio,
            "level": self.level,
            "M": self.M,
            "expected_loss": list(self.expected_loss),
            "expected_loss_se": self.expected_loss_se,
            "zero_prob": list(self.zero_prob),
            "var": list(self.var),
            "var_se": self.var_se,
            "cvar": list(self.cvar),
            "cvar_se": self.cvar_se,
            "n_components": self.n_components,
            "block_frequencies": dict(self.block_frequencies),
            "by_source": dict(self.by_source),
        }


def risk_metrics(sample, model: Optional[ZeroInflatedGammaMixture] = None, level=0.95,
                 block_frequencies=None, by_source=None, bootstrap=True):
    """Empirical and fitted risk summary of a loss sample."""
    if not 0 < level < 1:
        raise ValueError("level must be in (0, 1)")
    x = sample.losses if isinstance(sample, LossSample) else check_losses(sample)
    emp_var, emp_cvar = empirical_var(x, level), empirical_cvar(x, level)
    fit = (model.mean(), model.zero_mass_, model.var(level), model.cvar(level)) if model is not None \
        else (np.nan,) * 4
    var_se = cvar_se = 0.0
    if bootstrap and x.size > 1:
        var_se, cvar_se = _bootstrap_se(x, level)
    return RiskReport(
        level=level,
        M=int(x.size),
        expected_loss=(float(x.mean()), fit[0]),
        zero_prob=(float(np.mean(x == 0)), fit[1]),
        var=(emp_var, fit[2]),
        cvar=(emp_cvar, fit[3]),
        expected_loss_se=float(x.std(ddof=1) / np.sqrt(x.size)) if x.size > 1 else 0.0,
        var_se=var_se,
        cvar_se=cvar_se,
        n_components=int(model.weights_.size) if model is not None else 0,
        block_frequencies=dict(block_frequencies or {}),
        by_source=dict(by_source or {}),
        portfolio=getattr(sample, "portfolio", ""),
    )

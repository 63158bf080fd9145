"""Campaign simulation, loss fitting, risk metrics and portfolio decisions."""

from .campaign import CampaignResult, estimate_all_targeting, simulate_campaign
from .decision import (
    SurrogateModel,
    cara_utility,
    evaluate_portfolio_simulated,
    evaluate_portfolio_surrogate,
    optimize,
    sensitivity_rho,
)
from .elicitation import curve_to_pnp
from .lossfit import ZeroInflatedGammaMixture, fit_loss
from .metrics import LossSample, RiskReport, empirical_cvar, empirical_var, risk_metrics

__all__ = [
    "CampaignResult",
    "estimate_all_targeting",
    "simulate_campaign",
    "SurrogateModel",
    "cara_utility",
    "evaluate_portfolio_simulated",
    "evaluate_portfolio_surrogate",
    "optimize",
    "sensitivity_rho",
    "curve_to_pnp",
    "ZeroInflatedGammaMixture",
    "fit_loss",
    "LossSample",
    "RiskReport",
    "empirical_cvar",
    "empirical_var",
    "risk_metrics",
]

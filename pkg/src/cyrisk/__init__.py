"""Monte Carlo cyber risk assessment and management for systems with AI components."""

__version__ = "0.1.0"

from .errors import ConfigurationError, NoFeasiblePortfolio, ScenarioError
from .model import (
    Block,
    Constraints,
    Control,
    ControlCatalog,
    InsuranceProduct,
    Portfolio,
    PortfolioSpace,
    PortfolioTable,
    SystemGraph,
    enumerate_feasible,
    is_feasible,
    portfolio_cost,
)
from .scenario import Scenario, builtin_ads_scenario, dump_scenario, load_scenario
from .stochastic import Beta, Dirichlet, Gamma, PointMass, Poisson, RngStream, Uniform

__all__ = [
    "__version__",
    "ConfigurationError",
    "NoFeasiblePortfolio",
    "ScenarioError",
    "Block",
    "Constraints",
    "Control",
    "ControlCatalog",
    "InsuranceProduct",
    "Portfolio",
    "PortfolioSpace",
    "PortfolioTable",
    "SystemGraph",
    "enumerate_feasible",
    "is_feasible",
    "portfolio_cost",
    "Scenario",
    "builtin_ads_scenario",
    "dump_scenario",
    "load_scenario",
    "Beta",
    "Dirichlet",
    "Gamma",
    "PointMass",
    "Poisson",
    "RngStream",
    "Uniform",
]

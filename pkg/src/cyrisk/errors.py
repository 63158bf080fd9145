class ConfigurationError(ValueError):
    """A scenario or model object is inconsistent or missing a required entry."""


class ScenarioError(ConfigurationError):
    """Scenario validation failed; ``errors`` holds every problem found, path-qualified."""

    def __init__(self, errors):
        self.errors = list(errors)
        head = f"{len(self.errors)} scenario error(s):"
        super().__init__("\n  ".join([head, *self.errors]))


class NoFeasiblePortfolio(RuntimeError):
    """The constraints rule out every portfolio in the decision space."""

"""Exception types shared across the package."""


class UnsupportedConfigurationError(ValueError):
    """A valid input combination that the requested method cannot handle."""


class BudgetError(ValueError):
    """A computation would exceed a fixed size or cost budget."""

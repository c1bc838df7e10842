"""Hurricane outage prediction and load-curtailment estimation for power grids."""

__version__ = "0.1.0"

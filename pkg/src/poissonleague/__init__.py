"""Poisson-process checks and Monte Carlo season forecasts for league football."""

__version__ = "0.1.0"

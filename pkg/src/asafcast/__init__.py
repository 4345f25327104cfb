"""Estimation and probabilistic projection of the all-age smoking-attributable
fraction (ASAF) of mortality.

The pipeline goes: raw cause-of-death tables -> ASAF series (indirect
lung-cancer-based estimator) -> clear-pattern screening by double-logistic
least squares -> hierarchical Bayesian fit by MCMC -> trajectory projection
and out-of-sample validation.
"""

__version__ = "0.1.0"

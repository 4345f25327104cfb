"""Scalar log-density helpers for the model's prior families.

All functions return -inf outside the support instead of raising, so that
Metropolis proposals off the support are rejected naturally.  Parameters
follow the conventions used throughout the model: Gamma is (shape, rate),
inverse-Gamma is (shape, scale), Normal takes a *variance*, and truncated
Normals include their normalizing constant.
"""

from __future__ import annotations

import math

from scipy.special import log_ndtr, ndtr

_NEG_INF = float("-inf")
_LOG_2PI = math.log(2.0 * math.pi)


def norm_logpdf(x: float, mean: float, var: float) -> float:
    if var <= 0.0:
        return _NEG_INF
    return -0.5 * (_LOG_2PI + math.log(var)) - 0.5 * (x - mean) ** 2 / var


def truncnorm_logpdf(
    x: float,
    mean: float,
    var: float,
    lower: float = _NEG_INF,
    upper: float = math.inf,
) -> float:
    """Normal(mean, var) restricted to [lower, upper], renormalized."""
    if var <= 0.0 or not (lower <= x <= upper):
        return _NEG_INF
    sd = math.sqrt(var)
    if upper == math.inf:
        # P(X > lower) = Phi((mean - lower) / sd)
        log_z = log_ndtr((mean - lower) / sd)
    elif lower == _NEG_INF:
        log_z = log_ndtr((upper - mean) / sd)
    else:
        z = ndtr((upper - mean) / sd) - ndtr((lower - mean) / sd)
        if z <= 0.0:
            return _NEG_INF
        log_z = math.log(z)
    return norm_logpdf(x, mean, var) - log_z


def gamma_logpdf(x: float, shape: float, rate: float) -> float:
    if x <= 0.0 or shape <= 0.0 or rate <= 0.0:
        return _NEG_INF
    return (
        shape * math.log(rate)
        - math.lgamma(shape)
        + (shape - 1.0) * math.log(x)
        - rate * x
    )


def invgamma_logpdf(x: float, shape: float, scale: float) -> float:
    if x <= 0.0 or shape <= 0.0 or scale <= 0.0:
        return _NEG_INF
    return (
        shape * math.log(scale)
        - math.lgamma(shape)
        - (shape + 1.0) * math.log(x)
        - scale / x
    )


def lognorm_logpdf(x: float, mu: float, var: float) -> float:
    """Lognormal: log(x) ~ Normal(mu, var)."""
    if x <= 0.0 or var <= 0.0:
        return _NEG_INF
    lx = math.log(x)
    return norm_logpdf(lx, mu, var) - lx

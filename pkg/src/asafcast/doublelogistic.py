"""Five-parameter double-logistic curve: evaluation, least-squares fitting,
and the clear-pattern data-quality screen.

The curve is the difference of two logistic terms sharing an amplitude,
giving the rise-peak-decline shape of a diffusion process.  Fitting uses a
bounded trust-region least-squares solver with an analytic Jacobian, started
from a fixed deterministic grid because the squared-error surface is
multimodal.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares, minimize
from scipy.special import expit

from .errors import InsufficientData
from .ingest import Sex
from .petolopez import AsafSeries

EPOCH_YEAR = 1950

#: Box constraints: positive rates and amplitude, a4 within [0, 100].
_LOWER = np.array([1e-6, -np.inf, 1e-6, 0.0, 1e-6])
_UPPER = np.array([np.inf, np.inf, np.inf, 100.0, np.inf])


@dataclass(frozen=True)
class DlcParams:
    a1: float
    a2: float
    a3: float
    a4: float
    k: float

    def as_array(self) -> np.ndarray:
        return np.array([self.a1, self.a2, self.a3, self.a4, self.k])

    @classmethod
    def from_array(cls, theta: np.ndarray) -> "DlcParams":
        return cls(*map(float, theta))


@dataclass(frozen=True)
class FitReport:
    theta_hat: DlcParams
    r_squared: float
    n_obs: int
    max_obs: float
    converged: bool


def dlc_eval(t, theta) -> np.ndarray | float:
    """Evaluate the curve at year(s) ``t``.

    ``theta`` may be a DlcParams or a length-5 array (a1, a2, a3, a4, k).
    Uses the logistic sigmoid in its numerically stable form, so large
    exponents saturate instead of overflowing.
    """
    a1, a2, a3, a4, k = (
        theta.as_array() if isinstance(theta, DlcParams) else np.asarray(theta, float)
    )
    u = np.asarray(t, float) - EPOCH_YEAR
    g = k * expit(a1 * (u - a2)) - k * expit(a3 * (u - a2 - a4))
    return g if g.ndim else float(g)


def dlc_jacobian(t, theta) -> np.ndarray:
    """Partial derivatives of the curve w.r.t. (a1, a2, a3, a4, k), shape (n, 5)."""
    a1, a2, a3, a4, k = (
        theta.as_array() if isinstance(theta, DlcParams) else np.asarray(theta, float)
    )
    u = np.atleast_1d(np.asarray(t, float)) - EPOCH_YEAR
    x1 = u - a2
    x2 = u - a2 - a4
    s1 = expit(a1 * x1)
    s2 = expit(a3 * x2)
    d1 = s1 * (1.0 - s1)
    d2 = s2 * (1.0 - s2)
    return np.column_stack(
        [
            k * d1 * x1,
            -k * a1 * d1 + k * a3 * d2,
            -k * d2 * x2,
            k * a3 * d2,
            s1 - s2,
        ]
    )


def start_grid(max_obs: float) -> list[np.ndarray]:
    """Deterministic multistart grid; amplitude starts scale with the data."""
    k0 = max(max_obs, 1e-3)
    return [
        np.array(theta)
        for theta in itertools.product(
            (0.05, 0.1, 0.3),      # a1
            (10.0, 30.0, 50.0),    # a2
            (0.05, 0.1, 0.3),      # a3
            (20.0, 40.0, 60.0),    # a4
            (k0, 2.0 * k0),        # k
        )
    ]


#: Number of grid starts refined by the trust-region solver.
_N_REFINE = 24


def _sse(theta: np.ndarray, years: np.ndarray, y: np.ndarray) -> float:
    r = y - dlc_eval(years, theta)
    return float(r @ r)


def nls_fit(series: AsafSeries) -> FitReport:
    """Least-squares fit of the curve to one observed series.

    Deterministic given the series: all grid starts are refined and ties on
    the final objective go to the earlier start.  Starts whose trust-region
    solve fails fall back to a simplex refinement.
    """
    years = np.array(series.years, float)
    y = np.array([series.values[int(t)] for t in years])
    n_obs = len(y)
    if n_obs < 6:
        raise InsufficientData(f"{series.country}/{series.sex.value}: {n_obs} < 6 points")
    max_obs = float(y.max(initial=0.0))

    def residuals(theta):
        return y - dlc_eval(years, theta)

    def jac(theta):
        return -dlc_jacobian(years, theta)

    # two-stage multistart: rank the full grid by initial squared error,
    # then refine only the most promising basins (stable order, so the
    # procedure stays deterministic)
    starts = start_grid(max_obs)
    sse0 = np.array([_sse(theta0, years, y) for theta0 in starts])
    order = np.argsort(sse0, kind="stable")[:_N_REFINE]

    best_theta = None
    best_sse = np.inf
    any_converged = False
    for theta0 in (starts[i] for i in order):
        try:
            res = least_squares(
                residuals, theta0, jac=jac, bounds=(_LOWER, _UPPER),
                method="trf", max_nfev=200,
            )
            theta, sse, ok = res.x, 2.0 * res.cost, bool(res.status > 0)
        except Exception:
            res = minimize(
                _sse, theta0, args=(years, y), method="Nelder-Mead",
                options={"maxiter": 2000, "xatol": 1e-10, "fatol": 1e-14},
            )
            theta = np.clip(res.x, _LOWER, _UPPER)
            sse, ok = _sse(theta, years, y), bool(res.success)
        if sse < best_sse:
            best_sse, best_theta = sse, theta
            any_converged = ok
    assert best_theta is not None

    sst = float(((y - y.mean()) ** 2).sum())
    # an effectively constant series has no variance to explain
    r_squared = 0.0 if sst <= 1e-15 * float(y @ y) else float(1.0 - best_sse / sst)
    return FitReport(
        theta_hat=DlcParams.from_array(best_theta),
        r_squared=r_squared,
        n_obs=n_obs,
        max_obs=max_obs,
        converged=any_converged,
    )


def classify(report: FitReport, sex: Sex) -> bool:
    """Clear-pattern screen; thresholds differ by sex."""
    if sex is Sex.MALE:
        return report.n_obs > 10 and report.max_obs > 0.05 and report.r_squared > 0.5
    return report.n_obs > 10 and report.max_obs > 0.01 and report.r_squared > 0.6

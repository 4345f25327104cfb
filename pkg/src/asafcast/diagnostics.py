"""Convergence diagnostics and hyperparameter sensitivity.

Gelman-Rubin potential scale reduction (point and F-based 95% upper bound),
Raftery-Lewis run-length analysis via the two-state Markov reduction,
effective sample size by the initial-monotone-sequence rule, and normalized
local sensitivity of posterior summaries to the fixed prior constants.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import digamma, ndtr
from scipy.stats import f as f_dist
from scipy.stats import norm as norm_dist

from .errors import ConstantChain, DegenerateTarget, InsufficientDraws
from .model import GLOBAL_NAMES, HyperParams

# --- potential scale reduction ----------------------------------------------


@dataclass(frozen=True)
class PsrfResult:
    point: float
    upper95: float


def psrf(chains: np.ndarray) -> PsrfResult:
    """Gelman-Rubin statistic for one scalar across chains (rows = chains).

    Point estimate sqrt(var+/W) with var+ = ((n-1)/n) W + B/n; the upper
    bound replaces the between-chain term by its 97.5% F-quantile, with the
    denominator degrees of freedom estimated by method of moments.
    """
    chains = np.asarray(chains, float)
    m, n = chains.shape
    if m < 2 or n < 4:
        raise InsufficientDraws("psrf needs >= 2 chains of >= 4 draws")
    within = chains.var(axis=1, ddof=1)
    means = chains.mean(axis=1)
    w = float(within.mean())
    b_over_n = float(means.var(ddof=1))
    if w == 0.0:
        if b_over_n == 0.0:
            raise ConstantChain("all chains constant and equal")
        return PsrfResult(point=np.inf, upper95=np.inf)
    var_plus = (n - 1) / n * w + b_over_n
    point = math.sqrt(var_plus / w)
    var_w = float(within.var(ddof=1)) / m
    df_w = 2.0 * w**2 / var_w if var_w > 0.0 else np.inf
    fq = float(f_dist.ppf(0.975, m - 1, df_w)) if np.isfinite(df_w) else float(
        f_dist.ppf(0.975, m - 1, 1e12)
    )
    upper = math.sqrt((n - 1) / n + fq * b_over_n / w)
    return PsrfResult(point=point, upper95=max(upper, point))


# --- effective sample size --------------------------------------------------


def _autocovariances(x: np.ndarray) -> np.ndarray:
    n = len(x)
    xc = x - x.mean()
    size = 1 << (2 * n - 1).bit_length()
    fx = np.fft.rfft(xc, size)
    acov = np.fft.irfft(fx * np.conj(fx), size)[:n].real / n
    return acov


def ess(chains: np.ndarray) -> float:
    """Effective sample size with cross-chain variance correction and the
    initial monotone positive sequence truncation rule."""
    chains = np.asarray(chains, float)
    m, n = chains.shape
    acov = np.stack([_autocovariances(c) for c in chains])
    mean_acov = acov.mean(axis=0)
    w = float(np.mean([c.var(ddof=1) for c in chains]))
    if w == 0.0:
        raise ConstantChain("zero within-chain variance")
    var_plus = (n - 1) / n * w
    if m > 1:
        var_plus += float(chains.mean(axis=1).var(ddof=1))
    rho = 1.0 - (w - mean_acov) / var_plus

    # sum paired autocorrelations while the pair sums stay positive and
    # monotonically nonincreasing
    tau = 1.0
    prev_pair = np.inf
    t = 1
    while t + 1 < n:
        pair = rho[t] + rho[t + 1]
        if pair < 0.0:
            break
        pair = min(pair, prev_pair)
        tau += 2.0 * pair
        prev_pair = pair
        t += 2
    return float(min(m * n, m * n / tau))


# --- Raftery-Lewis ----------------------------------------------------------


@dataclass(frozen=True)
class RafteryResult:
    burn: int
    size: int
    dependence_factor: float
    thin: int


def raftery_nmin(q: float, r: float, s: float) -> float:
    """Required run length under independence."""
    z = float(norm_dist.ppf(0.5 * (s + 1.0)))
    return (z / r) ** 2 * q * (1.0 - q)


def raftery_lewis(
    chain: np.ndarray,
    q: float = 0.025,
    r: float = 0.0125,
    s: float = 0.95,
    eps: float = 0.001,
) -> RafteryResult:
    """Run-length requirements for estimating the q-quantile to precision r
    with probability s, via the two-state Markov reduction of the indicator
    chain with BIC-selected thinning."""
    chain = np.asarray(chain, float)
    nmin = raftery_nmin(q, r, s)
    if len(chain) < nmin:
        raise InsufficientDraws(f"need at least {math.ceil(nmin)} draws, have {len(chain)}")
    if np.all(chain == chain[0]):
        raise ConstantChain("constant chain has no quantile structure")
    cutoff = np.quantile(chain, q)
    z = (chain <= cutoff).astype(np.int8)
    if z.min() == z.max():
        raise ConstantChain("indicator chain is constant")

    kthin = 1
    while True:
        zt = z[::kthin]
        if len(zt) < 3:
            raise InsufficientDraws("chain exhausted while thinning")
        if _markov_bic(zt) <= 0.0 or z.min() == z.max():
            break
        kthin += 1

    zt = z[::kthin]
    trans = np.zeros((2, 2))
    np.add.at(trans, (zt[:-1], zt[1:]), 1.0)
    rows = trans.sum(axis=1)
    if rows[0] == 0 or rows[1] == 0 or trans[0, 1] == 0 or trans[1, 0] == 0:
        raise ConstantChain("degenerate transition structure")
    alpha = trans[0, 1] / rows[0]
    beta = trans[1, 0] / rows[1]

    lam = 1.0 - alpha - beta
    if abs(lam) < 1e-12:
        m_star = 1.0
    else:
        m_star = math.log(eps * (alpha + beta) / max(alpha, beta)) / math.log(abs(lam))
        m_star = max(m_star, 1.0)
    burn = int(math.ceil(m_star)) * kthin

    z_half = float(norm_dist.ppf(0.5 * (s + 1.0)))
    n_star = ((2.0 - alpha - beta) * alpha * beta / (alpha + beta) ** 3) * (z_half / r) ** 2
    size = burn + int(math.ceil(n_star)) * kthin
    return RafteryResult(
        burn=burn, size=size, dependence_factor=size / nmin, thin=kthin
    )


def _markov_bic(z: np.ndarray) -> float:
    """BIC comparing second- vs first-order Markov fit of a binary chain;
    <= 0 means first-order is adequate."""
    counts = np.zeros((2, 2, 2))
    np.add.at(counts, (z[:-2], z[1:-1], z[2:]), 1.0)
    g2 = 0.0
    for i in range(2):
        for j in range(2):
            for k in range(2):
                n_ijk = counts[i, j, k]
                if n_ijk == 0:
                    continue
                expected = counts[i, j, :].sum() * counts[:, j, k].sum() / counts[:, j, :].sum()
                g2 += 2.0 * n_ijk * math.log(n_ijk / expected)
    return g2 - 2.0 * math.log(max(len(z) - 2, 1))


# --- normalized local sensitivity -------------------------------------------


def local_sensitivity(target: np.ndarray, score: np.ndarray) -> float:
    """|S / sd(target)| with S the posterior covariance between the target
    draws and the per-draw derivative of the log prior w.r.t. the constant."""
    target = np.asarray(target, float)
    score = np.asarray(score, float)
    sd = float(target.std(ddof=1))
    if sd == 0.0:
        raise DegenerateTarget("target draws are constant")
    cov = float(np.cov(target, score, ddof=1)[0, 1])
    return abs(cov / sd)


def _d_gamma(x, alpha, beta, wrt):
    if wrt == "alpha":
        return math.log(beta) - digamma(alpha) + np.log(x)
    return alpha / beta - x


def _d_normal(x, alpha, beta, wrt):
    if wrt == "alpha":
        return (x - alpha) / beta
    return -0.5 / beta + (x - alpha) ** 2 / (2.0 * beta**2)


def _d_truncnorm_lower0(x, alpha, beta, wrt):
    # Normal(alpha, beta) restricted to x > 0; normalizer Phi(alpha/sqrt(beta))
    sd = math.sqrt(beta)
    u = alpha / sd
    hazard = float(norm_dist.pdf(u)) / float(ndtr(u))
    if wrt == "alpha":
        return (x - alpha) / beta - hazard / sd
    return -0.5 / beta + (x - alpha) ** 2 / (2.0 * beta**2) + 0.5 * alpha * hazard / beta**1.5


def _d_invgamma(x, alpha, beta, wrt):
    if wrt == "alpha":
        return math.log(beta) - digamma(alpha) - np.log(x)
    return alpha / beta - 1.0 / x


#: Prior family of each global parameter: (derivative fn, alpha field, beta field).
_PRIOR_FAMILY = {
    "a1m": (_d_gamma, "alpha_a1m", "beta_a1m"),
    "a2m": (_d_normal, "alpha_a2m", "beta_a2m"),
    "a3m": (_d_truncnorm_lower0, "alpha_a3m", "beta_a3m"),
    "a4": (_d_normal, "alpha_a4", "beta_a4"),
    "km": (_d_normal, "alpha_km", "beta_km"),
    "s2_a2m": (_d_invgamma, "alpha_s2_a2m", "beta_s2_a2m"),
    "s2_a4": (_d_invgamma, "alpha_s2_a4", "beta_s2_a4"),
    "s2_km": (_d_invgamma, "alpha_s2_km", "beta_s2_km"),
    "a1f": (_d_gamma, "alpha_a1f", "beta_a1f"),
    "delta_a2": (_d_normal, "alpha_delta_a2", "beta_delta_a2"),
    "a3f": (_d_gamma, "alpha_a3f", "beta_a3f"),
    "kf": (_d_normal, "alpha_kf", "beta_kf"),
    "s2_delta_a2": (_d_invgamma, "alpha_s2_delta_a2", "beta_s2_delta_a2"),
    "s2_kf": (_d_invgamma, "alpha_s2_kf", "beta_s2_kf"),
    "nu": (_d_normal, "alpha_nu", "beta_nu"),
    "rho2": (_d_invgamma, "alpha_rho2", "beta_rho2"),
    "s2h": (_d_invgamma, "alpha_s2h", "beta_s2h"),
}

#: Fixed row order of the sensitivity matrix: every prior constant.
HYPER_NAMES = tuple(
    name
    for global_name in GLOBAL_NAMES
    for name in _PRIOR_FAMILY[global_name][1:]
)


def prior_score(
    hyper_name: str, hyper: HyperParams, global_draws: dict[str, np.ndarray]
) -> np.ndarray:
    """Per-draw derivative of the global log prior w.r.t. one constant.

    Each constant appears in exactly one prior term, so the score depends
    only on the draws of that term's parameter.
    """
    for global_name, (deriv, alpha_name, beta_name) in _PRIOR_FAMILY.items():
        if hyper_name not in (alpha_name, beta_name):
            continue
        wrt = "alpha" if hyper_name == alpha_name else "beta"
        return np.asarray(
            deriv(
                global_draws[global_name],
                getattr(hyper, alpha_name),
                getattr(hyper, beta_name),
                wrt,
            ),
            float,
        )
    raise KeyError(hyper_name)


def sensitivity_matrix(
    global_draws: dict[str, np.ndarray], hyper: HyperParams
) -> dict[tuple[str, str], float]:
    """Normalized sensitivity of every global parameter to every constant.

    Keys are (hyper constant, global parameter); values are S-tilde.
    """
    out: dict[tuple[str, str], float] = {}
    for hyper_name in HYPER_NAMES:
        score = prior_score(hyper_name, hyper, global_draws)
        for global_name in GLOBAL_NAMES:
            out[(hyper_name, global_name)] = local_sensitivity(
                global_draws[global_name], score
            )
    return out


def write_sensitivity_csv(
    path: str | Path, matrix: dict[tuple[str, str], float], flag_above: float = 1.0
) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["hyperparameter", "parameter", "sensitivity", "flagged"])
        for hyper_name in HYPER_NAMES:
            for global_name in GLOBAL_NAMES:
                value = matrix[(hyper_name, global_name)]
                writer.writerow(
                    [hyper_name, global_name, repr(value), int(value > flag_above)]
                )


# --- per-run diagnostics report ---------------------------------------------


def diagnostics_report(
    param_draws: dict[str, np.ndarray],
) -> list[dict[str, object]]:
    """Per-parameter diagnostics rows (draws shaped chains x iterations).

    Raftery-Lewis is computed per chain at both tail quantiles and the most
    demanding chain is reported.  Degenerate parameters yield blank cells
    rather than aborting the report.
    """
    rows: list[dict[str, object]] = []
    for name, chains in param_draws.items():
        row: dict[str, object] = {"parameter": name}
        try:
            res = psrf(chains)
            row["psrf"] = res.point
            row["psrf_upper95"] = res.upper95
        except (ConstantChain, InsufficientDraws):
            row["psrf"] = row["psrf_upper95"] = ""
        try:
            row["ess"] = ess(chains)
        except ConstantChain:
            row["ess"] = ""
        for q, tag in ((0.025, "q025"), (0.975, "q975")):
            worst: RafteryResult | None = None
            try:
                for chain in chains:
                    res_rl = raftery_lewis(chain, q=q)
                    if worst is None or res_rl.dependence_factor > worst.dependence_factor:
                        worst = res_rl
            except (ConstantChain, InsufficientDraws):
                worst = None
            if worst is None:
                row[f"rl_burn_{tag}"] = row[f"rl_size_{tag}"] = row[f"rl_df_{tag}"] = ""
            else:
                row[f"rl_burn_{tag}"] = worst.burn
                row[f"rl_size_{tag}"] = worst.size
                row[f"rl_df_{tag}"] = worst.dependence_factor
        rows.append(row)
    return rows


_REPORT_COLUMNS = [
    "parameter", "psrf", "psrf_upper95",
    "rl_burn_q025", "rl_size_q025", "rl_df_q025",
    "rl_burn_q975", "rl_size_q975", "rl_df_q975",
    "ess",
]


def write_diagnostics_csv(path: str | Path, rows: list[dict[str, object]]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=_REPORT_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow(
                {
                    key: (repr(value) if isinstance(value, float) else value)
                    for key, value in row.items()
                }
            )

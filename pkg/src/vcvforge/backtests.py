"""Regulatory backtests for a VaR/ES forecast series against realized returns.

Covers violation counting (strict ``r_t < VaR_t`` rule), the Kupiec
unconditional-coverage LR test, the Christoffersen conditional-coverage LR
test (first-order Markov independence), a bootstrap test that exceedance
residuals beyond VaR are consistent with the predicted ES, the quadratic
loss score, and the scaled traffic-light zone per ~250 test days.

All verdicts use the 5% significance level.  A failed test with fewer
violations than expected is annotated as a conservative failure (capital
surplus rather than deficiency).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import chi2

SIGNIFICANCE = 0.05
GREEN_MAX_PER_250 = 4
YELLOW_MAX_PER_250 = 9


def _xlogy(x: float, y: float) -> float:
    # 0 * log(0) := 0 convention for degenerate likelihood terms
    return 0.0 if x == 0 else x * np.log(y)


@dataclass(frozen=True, eq=False)
class ViolationRecord:
    n: int
    hits: np.ndarray  # 0/1 indicators, r_t < var_t
    x: int
    expected: float
    hit_dates: tuple


@dataclass(frozen=True)
class TestVerdict:
    p_value: float
    passed: bool
    conservative_failure: bool


@dataclass(frozen=True, eq=False)
class BacktestReport:
    violations: ViolationRecord
    kupiec: tuple  # (LR_uc, p_uc)
    christoffersen: tuple  # (LR_ind, LR_cc, p_cc)
    es_test: tuple  # (statistic, p_es, method note)
    ql: float
    zone: str
    verdicts: dict = field(default_factory=dict)  # name -> TestVerdict

    @property
    def any_conservative_failure(self) -> bool:
        return any(v.conservative_failure for v in self.verdicts.values())


def violations(returns, var_series, alpha: float, dates=None) -> ViolationRecord:
    """Count strict violations r_t < VaR_t of an aligned forecast series."""
    r = np.asarray(returns, dtype=float)
    v = np.asarray(var_series, dtype=float)
    if r.shape != v.shape or r.ndim != 1:
        raise ValueError(f"length mismatch: returns {r.shape} vs VaR {v.shape}")
    hits = (r < v).astype(int)
    idx = np.flatnonzero(hits)
    hit_dates = tuple(dates[i] for i in idx) if dates is not None else tuple(int(i) for i in idx)
    return ViolationRecord(
        n=len(r), hits=hits, x=int(hits.sum()), expected=len(r) * alpha, hit_dates=hit_dates
    )


def kupiec_uc(x: int, n: int, alpha: float):
    """Kupiec unconditional coverage test.

    Likelihood ratio that the violation frequency equals ``alpha``:
    LR = -2 [ (n-x) ln(1-a) + x ln a - (n-x) ln(1-x/n) - x ln(x/n) ],
    chi-squared with 1 degree of freedom.  Returns ``(LR_uc, p_uc)``.
    """
    if not 0 <= x <= n:
        raise ValueError(f"x={x} outside [0, n={n}]")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    ll_null = _xlogy(n - x, 1.0 - alpha) + _xlogy(x, alpha)
    ll_alt = _xlogy(n - x, 1.0 - x / n) + _xlogy(x, x / n)
    lr = max(-2.0 * (ll_null - ll_alt), 0.0)
    return lr, float(chi2.sf(lr, df=1))


def christoffersen_cc(hits, alpha: float):
    """Christoffersen conditional coverage test.

    Combines the Kupiec statistic with a first-order Markov independence
    LR over the transition counts n00, n01, n10, n11; chi-squared with 2
    degrees of freedom.  With zero violations the independence term is 0
    by convention and the degrees of freedom stay at 2.  Returns
    ``(LR_ind, LR_cc, p_cc)``.
    """
    h = np.asarray(hits, dtype=int)
    if h.ndim != 1 or len(h) < 2:
        raise ValueError("hits must be a 1-d series of length >= 2")
    x = int(h.sum())
    lr_uc, _ = kupiec_uc(x, len(h), alpha)
    if x == 0:
        lr_ind = 0.0
    else:
        prev, curr = h[:-1], h[1:]
        n00 = int(np.sum((prev == 0) & (curr == 0)))
        n01 = int(np.sum((prev == 0) & (curr == 1)))
        n10 = int(np.sum((prev == 1) & (curr == 0)))
        n11 = int(np.sum((prev == 1) & (curr == 1)))
        total = n00 + n01 + n10 + n11
        pi = (n01 + n11) / total
        pi01 = n01 / (n00 + n01) if n00 + n01 else 0.0
        pi11 = n11 / (n10 + n11) if n10 + n11 else 0.0
        ll_null = _xlogy(n01 + n11, pi) + _xlogy(n00 + n10, 1.0 - pi)
        ll_alt = (
            _xlogy(n01, pi01)
            + _xlogy(n00, 1.0 - pi01)
            + _xlogy(n11, pi11)
            + _xlogy(n10, 1.0 - pi11)
        )
        lr_ind = max(-2.0 * (ll_null - ll_alt), 0.0)
    lr_cc = lr_uc + lr_ind
    return lr_ind, lr_cc, float(chi2.sf(lr_cc, df=2))


def mcneil_frey_es(returns, var_series, es_series, sigma_series, n_boot: int = 10_000, seed: int = 0):
    """Bootstrap test that realized losses on violation days match predicted ES.

    Exceedance residuals e_t = (r_t - ES_t) / sigma_t are collected on hit
    days; H0: mean(e) = 0 against H1: mean(e) < 0 (losses worse than ES).
    The p-value is a one-sided bootstrap of the mean with residuals centered
    under H0.  Returns ``(statistic, p_es, note)``.

    Conventions for degenerate samples: no exceedances passes by
    construction (p = 1); a single exceedance uses its sign (p = 1 if
    e >= 0 else 0.5).
    """
    if n_boot < 1000:
        raise ValueError(f"n_boot must be >= 1000, got {n_boot}")
    r = np.asarray(returns, dtype=float)
    v = np.asarray(var_series, dtype=float)
    e = np.asarray(es_series, dtype=float)
    s = np.asarray(sigma_series, dtype=float)
    if not (r.shape == v.shape == e.shape == s.shape):
        raise ValueError("returns, VaR, ES and sigma series must be aligned")
    hits = r < v
    if not hits.any():
        return 0.0, 1.0, "no exceedances; pass by construction"
    resid = (r[hits] - e[hits]) / s[hits]
    stat = float(resid.mean())
    if resid.size == 1:
        p = 1.0 if stat >= 0 else 0.5
        return stat, p, "single exceedance; sign rule"
    rng = np.random.default_rng(seed)
    centered = resid - stat
    draws = rng.choice(centered, size=(n_boot, resid.size), replace=True)
    boot_means = draws.mean(axis=1)
    p = (1 + int(np.sum(boot_means <= stat))) / (n_boot + 1)
    return stat, float(p), f"bootstrap, {n_boot} resamples"


def quadratic_loss(returns, var_series) -> float:
    """QL = sum over hit days of (VaR_t - r_t)^2; zero when violation-free."""
    r = np.asarray(returns, dtype=float)
    v = np.asarray(var_series, dtype=float)
    if r.shape != v.shape:
        raise ValueError("returns and VaR series must be aligned")
    hits = r < v
    return float(np.sum((v[hits] - r[hits]) ** 2))


def traffic_light(x: int, n: int):
    """Basel-style zone with thresholds scaled from the 250-day convention.

    Returns ``(zone, green_max, yellow_max)`` where the bounds are the
    scaled (fractional) thresholds actually applied.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    green_max = GREEN_MAX_PER_250 * n / 250.0
    yellow_max = YELLOW_MAX_PER_250 * n / 250.0
    if x <= green_max:
        zone = "green"
    elif x <= yellow_max:
        zone = "yellow"
    else:
        zone = "red"
    return zone, green_max, yellow_max


def evaluate(
    returns,
    var_series,
    es_series,
    sigma_series,
    alpha: float,
    dates=None,
    n_boot: int = 10_000,
    seed: int = 0,
) -> BacktestReport:
    """Run the full battery on one forecast series and assemble the report."""
    rec = violations(returns, var_series, alpha, dates=dates)
    lr_uc, p_uc = kupiec_uc(rec.x, rec.n, alpha)
    lr_ind, lr_cc, p_cc = christoffersen_cc(rec.hits, alpha)
    stat, p_es, note = mcneil_frey_es(
        returns, var_series, es_series, sigma_series, n_boot=n_boot, seed=seed
    )
    ql = quadratic_loss(returns, var_series)
    zone, _, _ = traffic_light(rec.x, rec.n)
    conservative = rec.x < rec.expected
    verdicts = {
        name: TestVerdict(
            p_value=p, passed=p >= SIGNIFICANCE,
            conservative_failure=(p < SIGNIFICANCE) and conservative,
        )
        for name, p in (("kupiec", p_uc), ("christoffersen", p_cc), ("es", p_es))
    }
    return BacktestReport(
        violations=rec,
        kupiec=(lr_uc, p_uc),
        christoffersen=(lr_ind, lr_cc, p_cc),
        es_test=(stat, p_es, note),
        ql=ql,
        zone=zone,
        verdicts=verdicts,
    )

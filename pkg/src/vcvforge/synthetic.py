"""Deterministic synthetic equity-index panel for fixtures and demo runs.

Seven correlated series with volatility clustering (AR(1) log-volatility)
and fat tails (common chi-square mixing, 5 degrees of freedom), expressed
as percent daily log returns and integrated into close prices on a weekday
calendar.  Everything is reproducible from the seed.
"""

from __future__ import annotations

from datetime import date

import numpy as np

from .market_data import PriceTable, weekday_range

DEFAULT_START = date(2020, 6, 30)
DEFAULT_END = date(2025, 6, 30)

VOL_PERSISTENCE = 0.97
VOL_OF_LOGVOL = 0.12
CROSS_CORR = 0.40
TAIL_DOF = 5.0
DAILY_DRIFT_PCT = 0.03


def synthetic_price_table(
    n_assets: int = 7,
    start: date = DEFAULT_START,
    end: date = DEFAULT_END,
    seed: int = 0,
) -> PriceTable:
    """Generate a fully dense synthetic close-price panel."""
    dates = weekday_range(start, end)
    t = len(dates)
    if t < 3:
        raise ValueError("date range too short for a synthetic panel")
    rng = np.random.default_rng(seed)

    corr = np.full((n_assets, n_assets), CROSS_CORR)
    np.fill_diagonal(corr, 1.0)
    chol = np.linalg.cholesky(corr)

    base_vol = np.linspace(0.8, 1.6, n_assets)  # percent per day
    logvol = np.zeros((t, n_assets))
    shocks = rng.standard_normal((t, n_assets)) * VOL_OF_LOGVOL
    for k in range(1, t):
        logvol[k] = VOL_PERSISTENCE * logvol[k - 1] + shocks[k]

    gauss = rng.standard_normal((t, n_assets)) @ chol.T
    mixing = rng.chisquare(TAIL_DOF, size=t) / TAIL_DOF
    fat = gauss / np.sqrt(mixing)[:, None] * np.sqrt((TAIL_DOF - 2.0) / TAIL_DOF)

    returns = DAILY_DRIFT_PCT + base_vol * np.exp(logvol) * fat  # percent
    returns[0] = 0.0
    start_prices = 100.0 * np.arange(1, n_assets + 1)
    prices = start_prices * np.exp(np.cumsum(returns, axis=0) / 100.0)

    asset_ids = tuple(f"SYN{i + 1}" for i in range(n_assets))
    return PriceTable(dates=tuple(dates), prices=prices, asset_ids=asset_ids)


def write_asset_csvs(table: PriceTable, out_dir) -> list:
    """Write one ``<ticker>.csv`` per asset (Date, Close); returns the paths."""
    from pathlib import Path

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, asset in enumerate(table.asset_ids):
        path = out / f"{asset}.csv"
        with open(path, "w") as fh:
            fh.write("Date,Close\n")
            for d, p in zip(table.dates, table.prices[:, i]):
                fh.write(f"{d.isoformat()},{p:.6f}\n")
        paths.append(path)
    return paths

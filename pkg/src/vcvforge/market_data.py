"""Price ingestion, weekday-calendar synchronization, gap filling, log returns.

Input is one CSV per asset (``Date`` and ``Close`` columns, case-insensitive,
ISO-8601 dates) or a single wide CSV with a date column plus one close column
per ticker.  Weekend rows are dropped, the calendars of all assets are
unioned, holes are forward-filled then leading holes backward-filled, and
returns are percent log returns r_t = ln(P_t / P_{t-1}) * 100.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from datetime import date, timedelta
from pathlib import Path

import numpy as np
import pandas as pd

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PriceTable:
    """Close prices on a synchronized weekday calendar; NaN marks unfilled holes."""

    dates: tuple
    prices: np.ndarray  # (T, N)
    asset_ids: tuple

    def __post_init__(self):
        if self.prices.shape != (len(self.dates), len(self.asset_ids)):
            raise ValueError("prices shape does not match dates x asset_ids")
        for i in range(1, len(self.dates)):
            if self.dates[i] <= self.dates[i - 1]:
                raise ValueError(f"dates not strictly increasing at {self.dates[i]}")
        for d in self.dates:
            if d.weekday() >= 5:
                raise ValueError(f"weekend date {d} in price table")
        bad = ~np.isnan(self.prices) & (self.prices <= 0)
        if bad.any():
            t, i = map(int, np.argwhere(bad)[0])
            raise ValueError(
                f"non-positive price for {self.asset_ids[i]} on {self.dates[t]}"
            )

    @property
    def is_filled(self) -> bool:
        return not np.isnan(self.prices).any()


@dataclass(frozen=True, eq=False)
class ReturnPanel:
    """Percent log returns; row t belongs to the later date of each price pair."""

    dates: tuple
    returns: np.ndarray  # (T-1, N)
    asset_ids: tuple

    @property
    def n_assets(self) -> int:
        return len(self.asset_ids)

    @property
    def n_obs(self) -> int:
        return self.returns.shape[0]


def weekday_range(start: date, end: date) -> list:
    """All Monday-Friday dates in [start, end]."""
    out = []
    d = start
    while d <= end:
        if d.weekday() < 5:
            out.append(d)
        d += timedelta(days=1)
    return out


def _as_date(value) -> date:
    return value if isinstance(value, date) else date.fromisoformat(str(value))


def _find_column(columns, wanted: str):
    for c in columns:
        if c.strip().lower() == wanted:
            return c
    return None


def _parse_price_column(df: pd.DataFrame, date_col: str, price_col: str, origin: str) -> pd.Series:
    """Parse one (Date, Close) column pair into a date-indexed float series.

    Empty cells are holes; anything else unparseable raises with file+line
    (line numbers count the header as line 1).
    """
    raw_dates = pd.to_datetime(df[date_col], format="ISO8601", errors="coerce")
    if raw_dates.isna().any():
        row = int(raw_dates.isna().idxmax())
        raise ValueError(
            f"{origin}, line {row + 2}: unparseable date {df[date_col].iloc[row]!r}"
        )
    values = df[price_col].astype(str).str.strip()
    holes = values.isin(("", "nan", "None", "NaN", "null", "NA"))
    parsed = pd.to_numeric(values.where(~holes), errors="coerce")
    bad = parsed.isna() & ~holes
    if bad.any():
        row = int(bad.idxmax())
        raise ValueError(
            f"{origin}, line {row + 2}: unparseable close value {df[price_col].iloc[row]!r}"
        )
    series = pd.Series(parsed.values, index=[d.date() for d in raw_dates])
    dup = series.index.duplicated(keep="last")
    if dup.any():
        log.warning("%s: %d duplicate dates, keeping last occurrence", origin, int(dup.sum()))
        series = series[~dup]
    return series.sort_index()


def _read_asset_csv(path: Path, asset: str) -> pd.Series:
    if not path.exists():
        raise FileNotFoundError(f"no price file for asset {asset}: {path}")
    df = pd.read_csv(path, dtype=str)
    date_col = _find_column(df.columns, "date")
    close_col = _find_column(df.columns, "close")
    if date_col is None:
        raise ValueError(f"{path}: missing 'Date' column (asset {asset})")
    if close_col is None:
        raise ValueError(f"{path}: missing 'Close' column (asset {asset})")
    return _parse_price_column(df, date_col, close_col, str(path))


def _read_wide_csv(path: Path, asset_ids) -> dict:
    df = pd.read_csv(path, dtype=str)
    date_col = _find_column(df.columns, "date")
    if date_col is None:
        raise ValueError(f"{path}: missing 'Date' column")
    out = {}
    lowered = {c.strip().lower(): c for c in df.columns}
    for asset in asset_ids:
        col = lowered.get(asset.strip().lower())
        if col is None:
            raise ValueError(f"{path}: missing close column for asset {asset}")
        out[asset] = _parse_price_column(df, date_col, col, f"{path}[{asset}]")
    return out


def load_prices(paths_or_dir, asset_ids, date_range) -> PriceTable:
    """Load close prices for the requested assets restricted to [start, end].

    ``paths_or_dir`` may be a directory holding ``<ticker>.csv`` files, a
    single wide CSV, or an explicit list of per-asset file paths.  Weekend
    rows are dropped and the calendar is the union of the per-asset
    calendars; holes stay NaN until ``synchronize_and_fill``.
    """
    asset_ids = tuple(asset_ids)
    if not asset_ids:
        raise ValueError("asset_ids must be non-empty")
    start, end = (_as_date(date_range[0]), _as_date(date_range[1]))
    if end < start:
        raise ValueError(f"empty date range: {start}..{end}")

    if isinstance(paths_or_dir, (str, Path)):
        root = Path(paths_or_dir)
        if root.is_dir():
            series = {a: _read_asset_csv(root / f"{a}.csv", a) for a in asset_ids}
        else:
            if len(asset_ids) == 1 and not _is_wide_header(root, asset_ids):
                series = {asset_ids[0]: _read_asset_csv(root, asset_ids[0])}
            else:
                series = _read_wide_csv(root, asset_ids)
    else:
        paths = [Path(p) for p in paths_or_dir]
        if len(paths) != len(asset_ids):
            raise ValueError(f"{len(paths)} files for {len(asset_ids)} assets")
        series = {a: _read_asset_csv(p, a) for a, p in zip(asset_ids, paths)}

    trimmed = {}
    for asset, s in series.items():
        keep = [d for d in s.index if start <= d <= end and d.weekday() < 5]
        trimmed[asset] = s.loc[keep]

    calendars = [set(s.index[s.notna()]) for s in trimmed.values()]
    union = sorted(set().union(*calendars))
    if not union:
        raise ValueError(f"no observations for any asset in {start}..{end}")
    if not set.intersection(*calendars):
        raise ValueError(f"assets share no common dates in {start}..{end}")

    prices = np.full((len(union), len(asset_ids)), np.nan)
    index = {d: t for t, d in enumerate(union)}
    for i, asset in enumerate(asset_ids):
        s = trimmed[asset].dropna()
        for d, v in s.items():
            prices[index[d], i] = v
    return PriceTable(dates=tuple(union), prices=prices, asset_ids=asset_ids)


def _is_wide_header(path: Path, asset_ids) -> bool:
    header = pd.read_csv(path, nrows=0).columns
    lowered = {c.strip().lower() for c in header}
    return all(a.strip().lower() in lowered for a in asset_ids)


def synchronize_and_fill(table: PriceTable) -> PriceTable:
    """Forward-fill per-asset holes, then backward-fill leading holes.

    Idempotent; errors if any asset has no observations at all.
    """
    if len(table.dates) < 2:
        raise ValueError("need at least 2 rows to synchronize")
    for i, asset in enumerate(table.asset_ids):
        if np.isnan(table.prices[:, i]).all():
            raise ValueError(f"asset {asset} has zero observations in range")
    frame = pd.DataFrame(table.prices)
    filled = frame.ffill().bfill().to_numpy()
    return PriceTable(dates=table.dates, prices=filled, asset_ids=table.asset_ids)


def to_log_returns(table: PriceTable) -> ReturnPanel:
    """Percent log returns of a filled price table."""
    if not table.is_filled:
        raise ValueError("price table has holes; run synchronize_and_fill first")
    returns = np.diff(np.log(table.prices), axis=0) * 100.0
    if not np.all(np.isfinite(returns)):
        t, i = map(int, np.argwhere(~np.isfinite(returns))[0])
        raise ValueError(
            f"non-finite return for {table.asset_ids[i]} on {table.dates[t + 1]}"
        )
    return ReturnPanel(
        dates=tuple(table.dates[1:]), returns=returns, asset_ids=table.asset_ids
    )

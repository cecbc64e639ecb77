from datetime import date

import numpy as np
import pytest

from vcvforge.market_data import synchronize_and_fill, to_log_returns
from vcvforge.synthetic import synthetic_price_table, write_asset_csvs


@pytest.fixture(scope="session")
def small_panel():
    """Compact 3-asset, ~1.5-year return panel for fast pipeline tests."""
    table = synthetic_price_table(
        n_assets=3, start=date(2021, 1, 4), end=date(2022, 6, 30), seed=7
    )
    return to_log_returns(synchronize_and_fill(table))


@pytest.fixture(scope="session")
def full_panel():
    """The bundled-shape 7-asset 5-year panel (generated, same parameters)."""
    table = synthetic_price_table(seed=0)
    return to_log_returns(synchronize_and_fill(table))


@pytest.fixture(scope="session")
def fixture_returns(small_panel):
    """One representative fat-tailed return series (length ~300)."""
    return np.ascontiguousarray(small_panel.returns[:300, 0])


@pytest.fixture()
def csv_dir(tmp_path):
    """Directory of per-asset CSVs for a small fresh panel."""
    table = synthetic_price_table(
        n_assets=3, start=date(2021, 1, 4), end=date(2021, 12, 31), seed=11
    )
    write_asset_csvs(table, tmp_path)
    return tmp_path, table

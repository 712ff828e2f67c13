from typing import Dict, List, Optional

import numpy as np
import pandas as pd
import pytest

from panel.panel_frame import PanelFrame


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run Monte Carlo studies")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


def raw_event(country1: str = "AAA", country2: str = "USA", year: int = 2000, goldstein: float = 3.0,
              root: int = 4, code: Optional[int] = None, name: Optional[str] = None,
              economic: str = "Not an economic event", **extra) -> Dict:
    """
    event record as it appears on disk
    """
    quads = {True: "Verbal Cooperation", False: "Verbal Conflict"}
    record = {
        "year": year,
        "country1": country1,
        "country2": country2,
        "event_name": name or f"{country1}-{country2} {year} {goldstein}",
        "event_description": "",
        "CAMEO_quad_class": quads[int(root) <= 8],
        "CAMEO_root_code": root,
        "CAMEO_event_code": code if code is not None else root * 10,
        "economic_event": economic,
        "Goldstein_Scale": goldstein,
    }
    record.update(extra)
    return record


def make_panel(columns: Dict[str, np.ndarray], n_countries: int, n_years: int, start_year: int = 2000,
               regions: Optional[List[str]] = None) -> PanelFrame:
    """
    balanced panel in country-major order with the given variable columns
    """
    countries = [f"C{i:02d}" for i in range(n_countries)]
    data = {
        "country": np.repeat(countries, n_years),
        "year": np.tile(np.arange(start_year, start_year + n_years), n_countries),
    }
    if regions is not None:
        data["region"] = np.repeat(regions, n_years)
    for name, values in columns.items():
        data[name] = np.asarray(values, dtype=float).reshape(-1)
    return PanelFrame(pd.DataFrame(data))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def two_way_panel(rng) -> PanelFrame:
    n_countries, n_years = 10, 20
    a = rng.normal(size=n_countries)
    b = rng.normal(size=n_years)
    x = rng.normal(size=(n_countries, n_years)) + a[:, None]
    y = 2.0 * x + a[:, None] + b[None, :] + 0.1 * rng.normal(size=(n_countries, n_years))
    return make_panel({"y": y, "x": x}, n_countries, n_years)

import numpy as np
import pytest

from tefs.timeseries import TimeSeriesDataset


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def ramp_dataset(T: int, D: int = 2) -> TimeSeriesDataset:
    """Every value encodes its own time index, so leakage is visible."""
    t = np.arange(T, dtype=float)
    feats = np.column_stack([t + 1000.0 * (i + 1) for i in range(D)])
    return TimeSeriesDataset(feats, t)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(RESULTS):
        ok, detail = RESULTS[name]
        terminalreporter.write_line(f"{name} {'PASS' if ok else 'FAIL'}: {detail}")

import numpy as np
import pytest

from bimosum.limit import QuantileRequest, cache_get_or_compute

_ACCEPTANCE = []


def record_acceptance(criterion, passed, detail=""):
    _ACCEPTANCE.append((criterion, bool(passed), detail))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, passed, detail in sorted(_ACCEPTANCE, key=lambda r: r[0]):
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {criterion}  {detail}")


@pytest.fixture(scope="session")
def quantile_cache(pytestconfig):
    """Quantile cache kept in pytest's cache directory so it survives runs."""
    return pytestconfig.cache.mkdir("bimosum-quantiles") / "quantiles.jsonl"


@pytest.fixture(scope="session")
def get_q(quantile_cache):
    def _get(T, windows, replicas=200_000, statistic="euclid", **kw):
        req = QuantileRequest(T, tuple(windows), replicas=replicas, statistic=statistic, **kw)
        return cache_get_or_compute(req, quantile_cache)

    return _get


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

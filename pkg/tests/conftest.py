import logfire
import pytest

from app.config import settings
from app.model.schema import PrimeContext
from app.service.field_service import FieldService

MERSENNE_61 = 2**61 - 1


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow tests")


def pytest_configure(config):
    settings.LOG_CONSOLE = False
    logfire.configure(send_to_logfire=False, console=False)


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def small_ctx() -> PrimeContext:
    return PrimeContext(p=101)


@pytest.fixture
def mersenne_ctx() -> PrimeContext:
    return PrimeContext(p=MERSENNE_61)


@pytest.fixture(scope="session")
def ctx64() -> PrimeContext:
    return FieldService.generate_prime(64, seed=7)

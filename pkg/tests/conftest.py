"""
Shared fixtures for the lab tests
"""
import logging

import pytest

from src.factor_sieve import build_sieve
from src.lab_config import reset_lab_config


@pytest.fixture(autouse=True)
def fresh_config(monkeypatch):
    """Every test starts from default settings read from a clean environment"""
    for name in ('RMF_LAB_BUDGET', 'RMF_LAB_K3_MAX_LIMIT', 'RMF_LAB_K3_MAX_M', 'RMF_LAB_PROP21_MAX_LIMIT',
                 'RMF_LAB_PARTITION_SIZE', 'RMF_LAB_WORKERS', 'RMF_LAB_SIEVE_CACHE_DIR', 'RMF_LAB_LOG_LEVEL'):
        monkeypatch.delenv(name, raising=False)
    reset_lab_config()
    yield
    reset_lab_config()
    # undo configure_logging() from CLI runs so caplog keeps seeing lab records
    lab_logger = logging.getLogger('src')
    lab_logger.handlers[:] = []
    lab_logger.propagate = True
    lab_logger.setLevel(logging.NOTSET)


@pytest.fixture(scope='session')
def small_sieve():
    return build_sieve(1000, use_cache=False)


@pytest.fixture(scope='session')
def medium_sieve():
    return build_sieve(20_000, use_cache=False)


@pytest.fixture(scope='session')
def large_sieve():
    return build_sieve(1_000_000, use_cache=False)

"""
Общая настройка pytest.

Длинные статистические кампании помечены @pytest.mark.slow и
запускаются только с флагом --runslow.
"""

import os
import sys

import pytest

# Добавляем путь к src для импорта
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False,
                     help="Запускать медленные статистические тесты")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: долгий статистический тест (нужен --runslow)")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="нужен --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)

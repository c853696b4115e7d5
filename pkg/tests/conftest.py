"""Shared fixtures: the default system configuration and its link budget."""

import pytest

from risthz.channel import derive_link_budget
from risthz.config import SystemConfig


@pytest.fixture(scope="session")
def cfg():
    return SystemConfig()


@pytest.fixture(scope="session")
def budget(cfg):
    return derive_link_budget(cfg)

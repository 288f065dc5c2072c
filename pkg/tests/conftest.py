"""Apply tests/pytest.ini's asyncio mode when pytest runs without ``-c tests/pytest.ini``."""

import configparser
from pathlib import Path


def pytest_configure(config):
    if config.getoption("asyncio_mode", default=None) is not None:
        return
    ini = configparser.ConfigParser()
    ini.read(Path(__file__).with_name("pytest.ini"))
    mode = ini.get("pytest", "asyncio_mode", fallback=None)
    if mode:
        config.option.asyncio_mode = mode

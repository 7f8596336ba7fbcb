import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from guided_decode import default_config, random_checkpoint


@pytest.fixture(scope="session")
def toy_config():
    return default_config()


@pytest.fixture(scope="session")
def toy_params(toy_config):
    return random_checkpoint(toy_config, 42)

import numpy as np
import pytest

from app.core.cache import cache_manager
from app.core.config import RunConfig
from app.core.schema import DesignParams


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def design():
    return DesignParams(N=20, M=10, n_blocks=1)


@pytest.fixture(autouse=True)
def fresh_cache():
    cache_manager.clear()
    yield
    cache_manager.clear()


@pytest.fixture
def make_config(tmp_path):
    """RunConfig writing into tmp_path"""

    def build(**values):
        values.setdefault("output_dir", str(tmp_path / "out"))
        values.setdefault("workers", 1)
        return RunConfig(**values)

    return build

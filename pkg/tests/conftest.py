import pytest

from galaxy import ids
from galaxy.config import GalaxyConfig
from galaxy.gateway.runtime import GalaxySystem


@pytest.fixture
def id_scope():
    with ids.scope(ids.IdAllocator()) as allocator:
        yield allocator


@pytest.fixture
def make_system(tmp_path):
    """Factory for isolated scripted runtimes."""
    counter = {"n": 0}

    def build(**overrides):
        counter["n"] += 1
        data_dir = tmp_path / f"sys{counter['n']}"
        config = GalaxyConfig(data_dir=data_dir, **overrides)
        return GalaxySystem(config=config, scripted=True)

    return build


@pytest.fixture
def system(make_system):
    return make_system()

import pytest

from app.cache import redis_client
from app.services import material_service


@pytest.fixture(autouse=True)
def no_redis(monkeypatch):
    """Run every test against the no-op cache client"""
    monkeypatch.setattr(redis_client, "redis_client", redis_client.DummyRedis())


@pytest.fixture(autouse=True)
def single_thread(monkeypatch):
    monkeypatch.setenv("SPHEREPLATE_THREADS", "1")


@pytest.fixture
def drude():
    return material_service.drude_model()


@pytest.fixture
def plasma():
    return material_service.plasma_model()


@pytest.fixture(scope="session")
def tabulated():
    return material_service.tabulated_model()

"""Pytest configuration and shared fixtures for finite-field Poncelet testing."""

import pytest
from src.helpers.config import Config
from src.helpers.FiniteField import field_new
from src.helpers.Pencil import c_alpha


@pytest.fixture
def f7():
    """The prime field F_7."""
    return field_new(7)


@pytest.fixture
def f11():
    """The prime field F_11, where −3 is a non-square."""
    return field_new(11)


@pytest.fixture
def f13():
    """The prime field F_13."""
    return field_new(13)


@pytest.fixture
def f43():
    """The prime field F_43 of the worked triangle example."""
    return field_new(43)


@pytest.fixture
def f9():
    """F_9 = F_3[T]/(T² + 1)."""
    return field_new(3, 2)


@pytest.fixture
def f25():
    """F_25, the smallest extension field with p >= 5."""
    return field_new(5, 2)


@pytest.fixture
def example_conics(f43):
    """A = C_11 and B = C_36 over F_43, a pair admitting a triangle."""
    return c_alpha(f43, 11), c_alpha(f43, 36)


@pytest.fixture
def reset_config():
    """Reset Config singleton before each test."""
    Config._instance = None
    Config._initialized = False
    yield
    Config._instance = None
    Config._initialized = False


@pytest.fixture
def valid_env(monkeypatch, tmp_path):
    """Set valid environment variables for testing."""
    monkeypatch.setenv("LOG_FILE", str(tmp_path / "logs" / "poncelet.log"))
    monkeypatch.setenv("LOG_LEVEL", "WARNING")
    monkeypatch.setenv("CENSUS_WORKERS", "2")
    monkeypatch.setenv("MC_SHARD_SIZE", "4096")
    monkeypatch.setenv("DEFAULT_SEED", "7")
    monkeypatch.setenv("REPORT_DIR", str(tmp_path / "reports"))
    monkeypatch.setenv("EXHAUSTIVE_MAX_Q", "7")


@pytest.fixture
def valid_config(reset_config, valid_env, monkeypatch):
    """Create a Config instance with valid test values."""
    monkeypatch.setattr("src.helpers.config.load_dotenv", lambda: None)
    return Config()

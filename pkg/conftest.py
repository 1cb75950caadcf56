"""
Shared pytest fixtures.
"""
import esper
import pytest

from method_registry import reset_registry


@pytest.fixture
def clean_world():
    """Fixture to clean the ECS world and the method registry around a test."""
    esper.clear_database()
    reset_registry()
    yield
    esper.clear_database()
    reset_registry()

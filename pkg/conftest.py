"""
pytest configuration shared by the test suite.
"""

import os
import sys
from pathlib import Path

import pytest

# Make the package importable without installation
root_dir = Path(__file__).parent
sys.path.insert(0, str(root_dir))


@pytest.fixture(autouse=True)
def isolated_settings(monkeypatch):
    """Keep ENTROFUNC_* variables from the host out of the tests."""
    for name in list(os.environ):
        if name.startswith("ENTROFUNC_"):
            monkeypatch.delenv(name, raising=False)
    monkeypatch.setenv("ENTROFUNC_THREADS", "1")

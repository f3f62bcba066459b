from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parent.parent


@pytest.fixture(scope="session")
def repo_root() -> Path:
    return REPO_ROOT


@pytest.fixture(scope="session")
def wan50_path() -> Path:
    path = REPO_ROOT / "data" / "wan50.topo"
    assert path.is_file(), "bundled test topology missing"
    return path

"""Shared fixtures: repo paths and the hand-built online shop model."""

from __future__ import annotations

import sys
from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parent.parent
FIXTURES = REPO_ROOT / "fixtures"

sys.path.insert(0, str(REPO_ROOT / "scripts"))
sys.path.insert(0, str(Path(__file__).resolve().parent))

from make_fixtures import online_shop  # noqa: E402


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture()
def shop_unencrypted():
    return online_shop(encrypting=False)


@pytest.fixture()
def shop_encrypted():
    return online_shop(encrypting=True)


@pytest.fixture(scope="session")
def constraint_file() -> Path:
    return FIXTURES / "constraints" / "confidentiality.dfdc"

"""Shared fixtures."""

from __future__ import annotations

import pytest

from claimcheck.textembed import StubEmbedder


@pytest.fixture
def stub():
    return StubEmbedder(dim=64)

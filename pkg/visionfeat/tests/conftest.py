"""Shared fixtures for the extractor tests."""

from __future__ import annotations

import pytest

from _images import write_image


@pytest.fixture
def image_dir(tmp_path):
    src = tmp_path / "images"
    src.mkdir()
    write_image(src / "one.png", seed=1)
    write_image(src / "two.png", seed=2, style="flat")
    write_image(src / "three.png", seed=3)
    return src

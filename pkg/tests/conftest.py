from pathlib import Path

import pytest

from kolmo.core.config import IntegratorConfig

SAMPLES = Path(__file__).resolve().parent.parent / "samples"


@pytest.fixture
def cfg() -> IntegratorConfig:
    return IntegratorConfig.from_settings(rtol=1e-12, atol=1e-12)


@pytest.fixture
def samples_dir() -> Path:
    return SAMPLES


@pytest.fixture
def out_dir(tmp_path) -> Path:
    path = tmp_path / "out"
    path.mkdir()
    return path

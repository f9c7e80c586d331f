from pathlib import Path

import numpy as np
import pytest

from gateforge import presets
from gateforge.model import ControlField, TimeGrid
from gateforge.settings import settings

ROOT = Path(__file__).resolve().parents[1]
PRESETS = ROOT / "presets"


@pytest.fixture(autouse=True)
def isolated_settings(tmp_path, monkeypatch):
    monkeypatch.setattr(settings, "STORAGE_DIR", str(tmp_path / "storage"))
    monkeypatch.setattr(settings, "OUTPUT_DIR", str(tmp_path / "runs"))
    monkeypatch.setattr(settings, "SEED", None)
    yield


@pytest.fixture
def preset_dir() -> Path:
    return PRESETS


@pytest.fixture
def two_level():
    return presets.two_level()


@pytest.fixture
def not_gate():
    return presets.target("not")


@pytest.fixture
def hadamard():
    return presets.target("hadamard")


@pytest.fixture
def diag_gate():
    return presets.target("diag")


@pytest.fixture
def gate_grid():
    return presets.gate_grid()


@pytest.fixture
def short_grid():
    return TimeGrid(horizon=5.0, step_count=50)


@pytest.fixture
def dense3():
    return presets.random_dense(3, 2, seed=11)


def random_field(grid: TimeGrid, seed: int, amplitude: float = 0.4) -> ControlField:
    rng = np.random.default_rng(seed)
    return ControlField.create(amplitude * rng.standard_normal(grid.step_count), grid)

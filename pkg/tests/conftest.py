import numpy as np
import pytest

from esnchip.chip.reservoir import ReservoirConfig
from esnchip.harness.experiment import load_config


@pytest.fixture
def small_reservoir() -> ReservoirConfig:
    return ReservoirConfig(n_i=3, n_r=16, n_o=4, sparsity=0.2)


@pytest.fixture
def synthetic_config():
    """A small synthetic experiment that trains in well under a second."""
    return load_config(overrides=[
        "experiment.name=tiny",
        "experiment.epochs=2",
        "experiment.global_seed=7",
        "reservoir.n_r=32",
        "dataset.kind=synthetic",
        "dataset.n_samples=1200",
        "reservoir.weight_mode=cached",
    ])


@pytest.fixture
def har_dir(tmp_path):
    """Two subject files in the seq,x,y,z,label layout; label 7 is outside every preset."""
    rng = np.random.default_rng(3)
    root = tmp_path / "har"
    root.mkdir()
    for subject in (1, 2):
        lines = []
        for i in range(100):
            label = (1, 2, 3, 4, 7)[(i // 20) % 5]
            x, y, z = rng.integers(1500, 2500, size=3)
            lines.append(f"{i},{x},{y},{z},{label}")
        (root / f"{subject}.csv").write_text("\n".join(lines) + "\n")
    return root

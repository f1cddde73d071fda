"""End-to-end runs of the simulated chip on synthetic streams, plus the real datasets when present."""
import math

import numpy as np
import pytest

from esnchip.analysis.noise import NoiseKind
from esnchip.config import DATA_ROOT
from esnchip.harness.datasets import DatasetKind, LoadedDataset, Recording
from esnchip.harness.experiment import load_config
from esnchip.harness.training import noise_sweep, prepare_data, run_training

BASE = [
    "experiment.name=acceptance",
    "experiment.global_seed=11",
    "dataset.kind=synthetic",
    "dataset.n_samples=4000",
    "reservoir.weight_mode=cached",
]


def _config(*extra):
    return load_config(overrides=BASE + list(extra))


@pytest.fixture(scope="module")
def trained():
    cfg = _config("experiment.epochs=3", "reservoir.n_r=64")
    data = prepare_data(cfg)
    return cfg, data, run_training(cfg, data)


def test_chip_tracks_float_model(trained):
    cfg, data, fixed = trained
    ref = run_training(cfg.model_copy(update={"precision": "float"}), data)
    assert fixed.metrics.accuracy > 0.5
    assert abs(fixed.metrics.accuracy - ref.metrics.accuracy) <= 0.03


def test_accuracy_drops_as_noise_grows(trained):
    cfg, data, result = trained
    rows = noise_sweep(cfg, result.readout, [math.inf, 20.0, -10.0], [NoiseKind.GAUSSIAN], data)
    acc = [r["accuracy"] for r in rows]
    assert acc[0] == result.metrics.accuracy
    assert acc[2] < acc[0]
    assert acc[2] <= acc[1] + 0.02


def test_training_accuracy_settles_over_epochs():
    cfg = _config("experiment.epochs=4", "reservoir.n_r=64")
    history = run_training(cfg).epoch_accuracy
    assert len(history) == 4
    assert history[-1] >= history[0] - 0.01
    assert max(history[1:]) >= history[0]


def test_larger_reservoir_does_not_hurt():
    small = run_training(_config("experiment.epochs=2", "reservoir.n_r=16"))
    large = run_training(_config("experiment.epochs=2", "reservoir.n_r=128"))
    assert large.metrics.accuracy >= small.metrics.accuracy - 0.02


def _slow_classes_under_nyquist_hum(seed=5, n=6000, segment=100):
    """Two classes that differ only in a small DC offset, buried under a large alternating hum."""
    rng = np.random.default_rng(seed)
    labels = np.repeat(rng.integers(0, 2, size=n // segment), segment)
    hum = 10.0 * (-1.0) ** np.arange(n)
    x = (np.where(labels == 1, 0.25, -0.25) + hum + 0.02 * rng.standard_normal(n))[:, None]
    ds = LoadedDataset(DatasetKind.SYNTHETIC, 50.0, 2)
    rec = Recording("hum", x, labels)
    ds.train.append(rec.head(0.7))
    ds.test.append(rec.tail(0.7))
    return ds


def test_filter_bank_recovers_low_band_classes():
    ds = _slow_classes_under_nyquist_hum()
    common = ["experiment.epochs=2", "reservoir.n_r=32", "reservoir.n_o=2"]
    raw_cfg = _config(*common, "reservoir.n_i=1", "experiment.feature_mode=raw")
    filtered_cfg = _config(*common, "reservoir.n_i=2", "experiment.feature_mode=filtered")
    raw = run_training(raw_cfg, prepare_data(raw_cfg, ds))
    filtered = run_training(filtered_cfg, prepare_data(filtered_cfg, ds))
    assert filtered.metrics.accuracy > 0.8
    assert filtered.metrics.accuracy > raw.metrics.accuracy


# --- recorded datasets ---

def _dataset_run(config_path: str, data_path, *overrides):
    if not data_path.exists():
        pytest.skip(f"{data_path} not present")
    cfg = load_config(config_path, overrides=[f"dataset.path={data_path}", *overrides])
    data = prepare_data(cfg)
    fixed = run_training(cfg, data)
    ref = run_training(cfg.model_copy(update={"precision": "float"}), data)
    return cfg, fixed, ref


@pytest.mark.slow
def test_har_flagship_run():
    cfg, fixed, ref = _dataset_run("configs/har.ini", DATA_ROOT / "har")
    assert fixed.metrics.accuracy > 1.0 / cfg.reservoir.n_o + 0.15
    assert abs(fixed.metrics.accuracy - ref.metrics.accuracy) <= 0.03
    assert fixed.summary()["esp_shift"] == cfg.reservoir.esp_shift


@pytest.mark.slow
def test_pfc_run():
    cfg, fixed, ref = _dataset_run("configs/pfc.ini", DATA_ROOT / "pfc.csv")
    assert fixed.metrics.accuracy > 1.0 / cfg.reservoir.n_o + 0.15
    assert abs(fixed.metrics.accuracy - ref.metrics.accuracy) <= 0.03

import numpy as np
import pandas as pd
import pytest

from esnchip.chip.fixed_point import SQ3_12
from esnchip.errors import DatasetError
from esnchip.harness.datasets import (
    HAR_LABEL_PRESETS, PFC_COLUMNS, DatasetKind, Normalizer, Recording, load_csv_generic, load_har,
    load_pfc, load_synthetic, load_synthetic_emg, remap_labels, synth_emg,
)


# --- HAR ---

def test_har_excludes_unlisted_labels(har_dir):
    ds = load_har(har_dir)
    assert ds.kind == DatasetKind.HAR
    assert ds.excluded == {7: 40}
    assert sum(len(r) for r in ds.train + ds.test) == 160


def test_har_labels_remapped_to_class_indices(tmp_path):
    path = tmp_path / "1.csv"
    path.write_text("0,1,2,3,1\n1,1,2,3,2\n2,1,2,3,3\n")
    ds = load_har(path, classes=(1, 2, 3), train_fraction=0.5)
    labels = np.concatenate([r.labels for r in ds.train + ds.test])
    assert labels.tolist() == [0, 1, 2]


def test_har_uci_preset_drops_label_two(har_dir):
    ds = load_har(har_dir, classes=HAR_LABEL_PRESETS["uci"])
    assert ds.excluded[2] == 40


def test_har_split_is_chronological_per_subject(har_dir):
    ds = load_har(har_dir, train_fraction=0.7)
    assert [r.name for r in ds.train] == ["1", "2"]
    for train, test in zip(ds.train, ds.test):
        assert len(train) == 56 and len(test) == 24


def test_har_empty_file(tmp_path):
    path = tmp_path / "1.csv"
    path.write_text("")
    ds = load_har(path)
    assert sum(len(r) for r in ds.train + ds.test) == 0
    assert ds.excluded_total == 0


def test_har_malformed_row_names_file_and_line(tmp_path):
    path = tmp_path / "3.csv"
    path.write_text("0,1,2,3,1\n1,1,oops,3,1\n")
    with pytest.raises(DatasetError, match=r"3\.csv:2"):
        load_har(path)


def test_har_missing_path(tmp_path):
    with pytest.raises(DatasetError):
        load_har(tmp_path / "nope")


# --- PFC ---

def _pfc_frame():
    rows = []
    for trial in (1, 2, 6, 7):
        for label in (1, 2, 5):
            for i in range(10):
                rows.append({"ch1": i, "ch2": -i, "label": label, "trial": trial})
    return pd.DataFrame(rows, columns=PFC_COLUMNS)


def test_pfc_trial_routing(tmp_path):
    path = tmp_path / "pfc.csv"
    _pfc_frame().to_csv(path, index=False)
    ds = load_pfc(path, classes=(1, 2))
    assert len(ds.train) == 4
    assert len(ds.test) == 2
    assert all("trial6" in r.name for r in ds.test)
    assert ds.excluded == {5: 40}


def test_pfc_missing_column(tmp_path):
    path = tmp_path / "pfc.csv"
    _pfc_frame().drop(columns="trial").to_csv(path, index=False)
    with pytest.raises(DatasetError, match="trial"):
        load_pfc(path)


def test_synthetic_emg_layout():
    frame = synth_emg(n_classes=2, trials=6, samples_per_trial=50, seed=1)
    assert list(frame.columns) == PFC_COLUMNS
    assert len(frame) == 2 * 6 * 50
    ds = load_synthetic_emg(classes=(1, 2), samples_per_trial=50)
    assert len(ds.train) == 10 and len(ds.test) == 2
    assert ds.sample_rate_hz == 4000.0


# --- generic and synthetic ---

def test_generic_csv(tmp_path):
    path = tmp_path / "stream.csv"
    path.write_text("a,b,label\n" + "".join(f"{i},{-i},{i % 2}\n" for i in range(20)))
    ds = load_csv_generic(path, sample_rate_hz=100.0, train_fraction=0.5)
    assert ds.n_features == 2
    assert ds.n_classes == 2
    assert len(ds.train[0]) == 10


def test_generic_csv_needs_label(tmp_path):
    path = tmp_path / "stream.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(DatasetError):
        load_csv_generic(path, None)


def test_synthetic_is_deterministic():
    a = load_synthetic(n_samples=500, seed=3)
    b = load_synthetic(n_samples=500, seed=3)
    assert np.array_equal(a.train[0].features, b.train[0].features)
    assert len(a.train[0]) == 350 and len(a.test[0]) == 150


# --- normalization ---

def test_normalizer_maps_train_range_to_unit_interval():
    rec = Recording("r", np.array([[0.0, 10.0], [5.0, 20.0], [10.0, 30.0]]), np.zeros(3, dtype=np.int64))
    norm = Normalizer.fit([rec])
    out = norm.transform(rec.features)
    assert out[:, 0].tolist() == [-1.0, 0.0, 1.0]
    assert out[:, 1].tolist() == [-1.0, 0.0, 1.0]


def test_normalizer_clips_outliers_to_representable_range():
    rec = Recording("r", np.array([[0.0], [1.0]]), np.zeros(2, dtype=np.int64))
    out = Normalizer.fit([rec]).transform(np.array([[1000.0]]))
    assert out[0, 0] == float(SQ3_12.max_real)


def test_normalizer_ignores_test_split():
    ds = load_synthetic(n_samples=500, seed=1)
    before = Normalizer.fit(ds.train)
    ds.test[0].features[:] = 1e6
    after = Normalizer.fit(ds.train)
    assert np.array_equal(before.low, after.low) and np.array_equal(before.high, after.high)


def test_normalizer_empty_train():
    with pytest.raises(DatasetError):
        Normalizer.fit([])


def test_records_stream_quantized_samples():
    ds = load_synthetic(n_samples=200, seed=2)
    records = list(ds.records("test"))
    assert len(records) == 60
    assert records[0].features.dtype == np.int64
    assert all(np.abs(r.features).max() <= SQ3_12.raw_max for r in records)


def test_remap_labels_counts_dropped():
    keep, mapped, dropped = remap_labels(np.array([4, 1, 9, 9, 4]), (4, 1))
    assert keep.tolist() == [True, True, False, False, True]
    assert mapped.tolist() == [0, 1, 0]
    assert dropped == {9: 2}

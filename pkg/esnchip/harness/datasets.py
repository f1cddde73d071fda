"""
Dataset ingestion. Every loader returns a LoadedDataset of continuous
recordings (one per subject, per trial or per synthetic session) already
routed to the train or test split; labels are remapped to 0..n_classes-1 and
rows of unselected classes are dropped and counted.
"""
import logging
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Sequence

import numpy as np
import pandas as pd

from esnchip.chip.fixed_point import SQ3_12, quantize_array
from esnchip.errors import ContractViolation, DatasetError

HAR_SAMPLE_RATE_HZ = 52.0
PFC_SAMPLE_RATE_HZ = 4000.0
HAR_COLUMNS = ["seq", "x", "y", "z", "label"]
PFC_COLUMNS = ["ch1", "ch2", "label", "trial"]
PFC_TEST_TRIAL = 6

# raw label -> class index, in class order
HAR_LABEL_PRESETS: Dict[str, Sequence[int]] = {
    "first-four": (1, 2, 3, 4),   # computer, standing, walking, stairs
    "uci": (1, 3, 4, 5),    # the same four activities in the archive's own numbering
}


class DatasetKind(str, Enum):
    HAR = "har"
    PFC = "pfc"
    CSV_GENERIC = "csv"
    SYNTHETIC = "synthetic"


@dataclass
class SampleRecord:
    features: np.ndarray   # raw SQ3.12 codes
    label: int
    index: int             # position within its recording


@dataclass
class Recording:
    name: str
    features: np.ndarray   # float, (T, n_features)
    labels: np.ndarray     # int, (T,)

    def __len__(self) -> int:
        return len(self.labels)

    def head(self, fraction: float) -> "Recording":
        n = int(round(len(self) * fraction))
        return Recording(self.name, self.features[:n], self.labels[:n])

    def tail(self, fraction: float) -> "Recording":
        n = int(round(len(self) * fraction))
        return Recording(self.name, self.features[n:], self.labels[n:])


@dataclass
class LoadedDataset:
    kind: DatasetKind
    sample_rate_hz: float
    n_classes: int
    train: List[Recording] = field(default_factory=list)
    test: List[Recording] = field(default_factory=list)
    excluded: Counter = field(default_factory=Counter)   # raw label -> dropped rows

    @property
    def n_features(self) -> int:
        for rec in self.train + self.test:
            return rec.features.shape[1]
        return 0

    @property
    def excluded_total(self) -> int:
        return sum(self.excluded.values())

    def summary(self) -> dict:
        return {
            "kind": self.kind.value,
            "sample_rate_hz": self.sample_rate_hz,
            "n_classes": self.n_classes,
            "train_samples": sum(len(r) for r in self.train),
            "test_samples": sum(len(r) for r in self.test),
            "excluded": {str(k): v for k, v in sorted(self.excluded.items())},
        }

    def records(self, split: str = "all", normalizer: Optional["Normalizer"] = None) -> Iterator[SampleRecord]:
        """Streams SampleRecords; features are normalized (train-fitted) and quantized."""
        if split not in ("train", "test", "all"):
            raise ContractViolation(f"unknown split {split!r}")
        recs = {"train": self.train, "test": self.test, "all": self.train + self.test}[split]
        if normalizer is None:
            normalizer = Normalizer.fit(self.train)
        for rec in recs:
            raw = quantize_array(normalizer.transform(rec.features), SQ3_12)
            for i, label in enumerate(rec.labels):
                yield SampleRecord(raw[i], int(label), i)


# --- Normalization ---

@dataclass
class Normalizer:
    """Per-feature affine map of the training range onto [-scale, scale]."""
    low: np.ndarray
    high: np.ndarray
    scale: float = 1.0

    @classmethod
    def fit(cls, recordings: Sequence[Recording], scale: float = 1.0) -> "Normalizer":
        rows = [r.features for r in recordings if len(r)]
        if not rows:
            raise DatasetError("cannot fit normalization on an empty training split")
        stacked = np.concatenate(rows)
        return cls(stacked.min(axis=0), stacked.max(axis=0), scale)

    def transform(self, features: np.ndarray) -> np.ndarray:
        span = self.high - self.low
        span = np.where(span == 0, 1.0, span)
        unit = (np.asarray(features, dtype=np.float64) - self.low) / span
        # test samples outside the training range stay representable
        return np.clip((2.0 * unit - 1.0) * self.scale, float(SQ3_12.min_real), float(SQ3_12.max_real))


# --- Label handling ---

def remap_labels(raw: np.ndarray, classes: Sequence[int]) -> tuple[np.ndarray, np.ndarray, Counter]:
    """Returns (mask of kept rows, class indices of kept rows, excluded counts per raw label)."""
    lookup = {int(c): i for i, c in enumerate(classes)}
    keep = np.isin(raw, list(lookup))
    mapped = np.array([lookup[int(v)] for v in raw[keep]], dtype=np.int64)
    dropped = Counter({int(k): int(v) for k, v in zip(*np.unique(raw[~keep], return_counts=True))})
    return keep, mapped, dropped


def _read_numeric_csv(path: Path, columns: List[str], header: bool) -> pd.DataFrame:
    try:
        frame = pd.read_csv(path, header=0 if header else None, dtype=str, skip_blank_lines=True)
    except pd.errors.EmptyDataError:
        return pd.DataFrame(columns=columns)
    if header:
        frame.columns = [c.lower().strip() for c in frame.columns]
        missing = [c for c in columns if c not in frame.columns]
        if missing:
            raise DatasetError(f"{path}: missing column(s) {', '.join(missing)}")
        frame = frame[columns]
    elif frame.shape[1] != len(columns):
        raise DatasetError(f"{path}:1: expected {len(columns)} columns, found {frame.shape[1]}")
    else:
        frame.columns = columns

    numeric = frame.apply(pd.to_numeric, errors="coerce")
    bad = numeric.isna().any(axis=1).to_numpy()
    if bad.any():
        row = int(np.argmax(bad))
        line = row + (2 if header else 1)
        raise DatasetError(f"{path}:{line}: malformed row {frame.iloc[row].tolist()}")
    return numeric


def _split_recording(rec: Recording, train_fraction: float) -> tuple[Recording, Recording]:
    return rec.head(train_fraction), rec.tail(train_fraction)


# --- HAR ---

def load_har(path, classes: Sequence[int] = HAR_LABEL_PRESETS["first-four"],
             train_fraction: float = 0.70) -> LoadedDataset:
    """
    Chest-accelerometer activity data: a directory of per-subject CSV files
    (or one file) with integer rows seq,x,y,z,label at 52 Hz. Each subject's
    recording is split chronologically.
    """
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"{path}: dataset not found")
    files = sorted(path.glob("*.csv"), key=_natural_key) if path.is_dir() else [path]
    ds = LoadedDataset(DatasetKind.HAR, HAR_SAMPLE_RATE_HZ, len(classes))
    for file in files:
        frame = _read_numeric_csv(file, HAR_COLUMNS, header=False)
        raw_labels = frame["label"].to_numpy(dtype=np.int64)
        keep, mapped, dropped = remap_labels(raw_labels, classes)
        ds.excluded.update(dropped)
        rec = Recording(file.stem, frame[["x", "y", "z"]].to_numpy(dtype=np.float64)[keep], mapped)
        train, test = _split_recording(rec, train_fraction)
        ds.train.append(train)
        ds.test.append(test)
    logging.info(f"Loaded HAR from {path}: {len(files)} subject file(s), "
                 f"{sum(map(len, ds.train))} train / {sum(map(len, ds.test))} test samples, "
                 f"{ds.excluded_total} rows excluded")
    return ds


def _natural_key(p: Path):
    stem = p.stem
    return (int(stem), stem) if stem.isdigit() else (float("inf"), stem)


# --- PFC (EMG finger movements) ---

def load_pfc(path, classes: Sequence[int] = (1, 2, 3, 4), test_trial: int = PFC_TEST_TRIAL) -> LoadedDataset:
    """
    Two-channel EMG at 4 kHz in the canonical `ch1,ch2,label,trial` CSV.
    Each contiguous (label, trial) run is one recording; trials before
    test_trial train, test_trial tests, later trials are ignored.
    """
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"{path}: dataset not found")
    frame = _read_numeric_csv(path, PFC_COLUMNS, header=True)
    return _pfc_from_frame(frame, classes, test_trial, source=str(path))


def _pfc_from_frame(frame: pd.DataFrame, classes: Sequence[int], test_trial: int, source: str) -> LoadedDataset:
    ds = LoadedDataset(DatasetKind.PFC, PFC_SAMPLE_RATE_HZ, len(classes))
    raw_labels = frame["label"].to_numpy(dtype=np.int64)
    keep, mapped, dropped = remap_labels(raw_labels, classes)
    ds.excluded.update(dropped)
    kept = frame[keep].assign(cls=mapped)
    if kept.empty:
        return ds
    # new recording wherever label or trial changes
    run_id = (kept[["label", "trial"]].diff().abs().sum(axis=1) != 0).cumsum()
    for _, run in kept.groupby(run_id, sort=True):
        trial = int(run["trial"].iloc[0])
        rec = Recording(f"label{int(run['label'].iloc[0])}-trial{trial}",
                        run[["ch1", "ch2"]].to_numpy(dtype=np.float64),
                        run["cls"].to_numpy(dtype=np.int64))
        if trial < test_trial:
            ds.train.append(rec)
        elif trial == test_trial:
            ds.test.append(rec)
    logging.info(f"Loaded PFC from {source}: {len(ds.train)} train / {len(ds.test)} test runs, "
                 f"{ds.excluded_total} rows excluded")
    return ds


def synth_emg(n_classes: int = 4, trials: int = 6, samples_per_trial: int = 2000,
              seed: int = 0) -> pd.DataFrame:
    """
    EMG-like stand-in in the canonical PFC layout: per class, band-limited
    noise bursts with a class-specific envelope and channel balance.
    """
    rng = np.random.default_rng(seed)
    t = np.arange(samples_per_trial) / PFC_SAMPLE_RATE_HZ
    frames = []
    for trial in range(1, trials + 1):
        for c in range(n_classes):
            carrier = rng.standard_normal((samples_per_trial, 2))
            # crude band limit: moving average over 4 samples
            kernel = np.ones(4) / 4
            carrier = np.stack([np.convolve(carrier[:, k], kernel, mode="same") for k in range(2)], axis=1)
            burst_hz = 2.0 + 1.5 * c
            envelope = 0.5 + 0.5 * np.abs(np.sin(2 * np.pi * burst_hz * t))
            balance = np.array([1.0 + 0.4 * c, 1.8 - 0.3 * c])
            signal = carrier * envelope[:, None] * balance
            frames.append(pd.DataFrame({
                "ch1": signal[:, 0], "ch2": signal[:, 1],
                "label": c + 1, "trial": trial,
            }))
    return pd.concat(frames, ignore_index=True)


def load_synthetic_emg(classes: Sequence[int] = (1, 2, 3, 4), samples_per_trial: int = 2000,
                       seed: int = 0) -> LoadedDataset:
    frame = synth_emg(max(classes), samples_per_trial=samples_per_trial, seed=seed)
    return _pfc_from_frame(frame, classes, PFC_TEST_TRIAL, source="synthetic EMG")


# --- Generic CSV and synthetic streams ---

def load_csv_generic(path, sample_rate_hz: Optional[float], train_fraction: float = 0.70,
                     label_column: str = "label", classes: Optional[Sequence[int]] = None) -> LoadedDataset:
    """Headered CSV: every column but the label is a feature; one chronological recording."""
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"{path}: dataset not found")
    try:
        header = pd.read_csv(path, nrows=0).columns
    except pd.errors.EmptyDataError:
        raise DatasetError(f"{path}: empty file without header")
    columns = [c.lower().strip() for c in header]
    if label_column not in columns:
        raise DatasetError(f"{path}: no '{label_column}' column")
    frame = _read_numeric_csv(path, columns, header=True)
    raw_labels = frame[label_column].to_numpy(dtype=np.int64)
    classes = classes if classes is not None else sorted(set(raw_labels.tolist()))
    keep, mapped, dropped = remap_labels(raw_labels, classes)
    feature_cols = [c for c in columns if c != label_column]
    ds = LoadedDataset(DatasetKind.CSV_GENERIC, sample_rate_hz or 0.0, len(classes), excluded=dropped)
    rec = Recording(path.stem, frame[feature_cols].to_numpy(dtype=np.float64)[keep], mapped)
    train, test = _split_recording(rec, train_fraction)
    ds.train.append(train)
    ds.test.append(test)
    return ds


def load_synthetic(n_classes: int = 4, n_samples: int = 4000, n_features: int = 3, seed: int = 0,
                   train_fraction: float = 0.70, sample_rate_hz: float = HAR_SAMPLE_RATE_HZ,
                   segment: int = 80) -> LoadedDataset:
    """
    Separable multi-class stream: each class holds a distinct mean and a
    class-specific sinusoid per channel, in segments of `segment` samples.
    """
    rng = np.random.default_rng(seed)
    means = rng.uniform(-1.0, 1.0, size=(n_classes, n_features))
    freqs = rng.uniform(0.5, 4.0, size=(n_classes, n_features))
    n_segments = max(1, n_samples // segment)
    labels = np.repeat(rng.integers(0, n_classes, size=n_segments), segment)[:n_samples]
    labels = np.pad(labels, (0, n_samples - len(labels)), mode="edge")
    t = np.arange(n_samples)[:, None] / sample_rate_hz
    features = means[labels] + 0.3 * np.sin(2 * np.pi * freqs[labels] * t) \
        + 0.05 * rng.standard_normal((n_samples, n_features))
    ds = LoadedDataset(DatasetKind.SYNTHETIC, sample_rate_hz, n_classes)
    train, test = _split_recording(Recording("synthetic", features, labels), train_fraction)
    ds.train.append(train)
    ds.test.append(test)
    return ds

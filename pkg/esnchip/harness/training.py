"""
End-to-end train / eval loops.

Each recording is streamed through a freshly reset reservoir; the readout
is updated after every sample (n_t = 1). Without output feedback the
reservoir trajectory does not depend on the readout, so states are computed
once and replayed for every epoch.
"""
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from esnchip.analysis.metrics import Metrics, compute_metrics
from esnchip.analysis.noise import NoiseKind, NoiseSpec, inject_noise
from esnchip.analysis.oracle import ridge_sweep
from esnchip.chip.dataflow import LatencyReport, realtime_ok, throughput
from esnchip.chip.fixed_point import SQ3_12, SaturationCounter, quantize_array
from esnchip.chip.readout import FloatReadout, GradientMonitor, Readout, ReadoutState, init_weights
from esnchip.chip.reservoir import FloatReservoir, Reservoir
from esnchip.errors import ContractViolation, DatasetError
from esnchip.harness.datasets import LoadedDataset, Normalizer, Recording
from esnchip.harness.experiment import ExperimentConfig, load_dataset
from esnchip.harness.filters import FeatureMode, build_features, resolve_mode


@dataclass
class EncodedRecording:
    name: str
    inputs: np.ndarray   # raw SQ3.12, (T, n_i)
    labels: np.ndarray


@dataclass
class PreparedData:
    dataset: LoadedDataset
    mode: FeatureMode
    normalizer: Normalizer
    train: List[EncodedRecording]
    test: List[EncodedRecording]
    cutoff_hz: float = 1.0

    def encode(self, recordings: Iterable[Recording]) -> List[EncodedRecording]:
        return [encode_recording(r, self.mode, self.normalizer, self.dataset.sample_rate_hz, self.cutoff_hz)
                for r in recordings]

    def holdout(self, fraction: float) -> "PreparedData":
        """Train on the head of every training recording, validate on its tail."""
        keep = 1.0 - fraction
        train, val = [], []
        for rec in self.train:
            n = int(round(len(rec.labels) * keep))
            train.append(EncodedRecording(rec.name, rec.inputs[:n], rec.labels[:n]))
            val.append(EncodedRecording(rec.name, rec.inputs[n:], rec.labels[n:]))
        return replace(self, train=train, test=val)


def encode_recording(rec: Recording, mode: FeatureMode, normalizer: Normalizer,
                     sample_rate_hz: float, cutoff_hz: float) -> EncodedRecording:
    features = build_features(rec.features, mode, sample_rate_hz, cutoff_hz)
    return EncodedRecording(rec.name, quantize_array(normalizer.transform(features), SQ3_12), rec.labels)


def prepare_data(cfg: ExperimentConfig, dataset: Optional[LoadedDataset] = None) -> PreparedData:
    """Filters, fits the normalizer on the training split only, and quantizes both splits."""
    dataset = dataset if dataset is not None else load_dataset(cfg)
    if not any(len(r) for r in dataset.train):
        raise DatasetError("the training split is empty")
    if dataset.n_classes > cfg.reservoir.n_o:
        raise ContractViolation(f"{dataset.n_classes} classes but only n_o={cfg.reservoir.n_o} outputs")
    mode = resolve_mode(cfg.feature_mode, dataset.n_features, cfg.reservoir.n_i)
    fs, cutoff = dataset.sample_rate_hz, cfg.dataset.cutoff_hz
    train_features = [Recording(r.name, build_features(r.features, mode, fs, cutoff), r.labels)
                      for r in dataset.train]
    normalizer = Normalizer.fit(train_features)
    data = PreparedData(dataset, mode, normalizer, [], [], cutoff)
    data.train = [EncodedRecording(r.name, quantize_array(normalizer.transform(r.features), SQ3_12), r.labels)
                  for r in train_features]
    data.test = data.encode(dataset.test)
    logging.info(f"Prepared {mode.value} features: {len(data.train)} train / {len(data.test)} test recordings")
    return data


@dataclass
class TrainingResult:
    config: ExperimentConfig
    metrics: Metrics
    latency: LatencyReport
    readout: Optional[ReadoutState] = None        # fixed precision
    float_weights: Optional[np.ndarray] = None    # float precision
    epoch_accuracy: List[float] = field(default_factory=list)   # online accuracy while training
    saturation: Dict[str, int] = field(default_factory=dict)
    gradients: dict = field(default_factory=dict)

    def summary(self) -> dict:
        return {
            "precision": self.config.precision,
            "esp_shift": self.config.reservoir.esp_shift,
            "metrics": self.metrics.as_dict(),
            "latency": self.latency.as_row(),
            "epoch_accuracy": self.epoch_accuracy,
            "saturation": self.saturation,
            "gradients": self.gradients,
        }


# --- State collection ---

def reservoir_states(reservoir: Reservoir, recordings: Sequence[EncodedRecording]) -> List[np.ndarray]:
    states = []
    for rec in recordings:
        reservoir.reset()
        states.append(reservoir.run(rec.inputs))
    return states


def float_states(reservoir: FloatReservoir, recordings: Sequence[EncodedRecording]) -> List[np.ndarray]:
    states = []
    for rec in recordings:
        reservoir.reset()
        states.append(reservoir.run(rec.inputs / float(SQ3_12.one)))
    return states


# --- Fixed-point loop ---

def _train_fixed(cfg: ExperimentConfig, data: PreparedData, counter: SaturationCounter):
    reservoir = Reservoir(cfg.reservoir, counter)
    readout = Readout(init_weights(cfg.readout.init_seed, cfg.readout.n_o, cfg.reservoir.n_r, cfg.readout),
                      GradientMonitor(), counter)
    feedback = cfg.reservoir.feedback_enabled
    cached = None if feedback else reservoir_states(reservoir, data.train)
    history = []
    for epoch in range(cfg.epochs):
        correct = total = 0
        for r, rec in enumerate(data.train):
            if feedback:
                reservoir.reset()
            y_prev = None
            for t, label in enumerate(rec.labels):
                if feedback:
                    x = reservoir.step(rec.inputs[t], y_prev)
                else:
                    x = cached[r][t]
                pred = readout.train_step(x, int(label))
                y_prev = pred.y_hat
                correct += pred.argmax_class == label
                total += 1
        acc = correct / total if total else 0.0
        history.append(acc)
        logging.info(f"Epoch {epoch + 1}/{cfg.epochs}: online training accuracy {acc:.4f}")
    return reservoir, readout, history


def _predict_fixed(cfg: ExperimentConfig, reservoir: Reservoir, state: ReadoutState,
                   recordings: Sequence[EncodedRecording]) -> np.ndarray:
    readout = Readout(state)
    preds = []
    for rec in recordings:
        reservoir.reset()
        y_prev = None
        for u in rec.inputs:
            x = reservoir.step(u, y_prev if cfg.reservoir.feedback_enabled else None)
            pred = readout.predict(x)
            y_prev = pred.y_hat
            preds.append(pred.argmax_class)
    return np.array(preds, dtype=np.int64)


# --- Float reference loop ---

def _float_readout(cfg: ExperimentConfig) -> FloatReadout:
    init = init_weights(cfg.readout.init_seed, cfg.readout.n_o, cfg.reservoir.n_r, cfg.readout)
    return FloatReadout(init.w / float(1 << init.fmt.frac_bits), 2.0 ** -cfg.readout.alpha_shift)


def _train_float(cfg: ExperimentConfig, data: PreparedData):
    reservoir = FloatReservoir(cfg.reservoir)
    readout = _float_readout(cfg)
    feedback = cfg.reservoir.feedback_enabled
    cached = None if feedback else float_states(reservoir, data.train)
    history = []
    for epoch in range(cfg.epochs):
        correct = total = 0
        for r, rec in enumerate(data.train):
            if feedback:
                reservoir.reset()
            y_prev = None
            for t, label in enumerate(rec.labels):
                x = reservoir.step(rec.inputs[t] / float(SQ3_12.one), y_prev) if feedback else cached[r][t]
                y_prev = readout.train_step(x, int(label))
                correct += int(np.argmax(y_prev)) == label
                total += 1
        history.append(correct / total if total else 0.0)
        logging.info(f"Epoch {epoch + 1}/{cfg.epochs} (float): online training accuracy {history[-1]:.4f}")
    return reservoir, readout, history


def _predict_float(cfg: ExperimentConfig, reservoir: FloatReservoir, readout: FloatReadout,
                   recordings: Sequence[EncodedRecording]) -> np.ndarray:
    preds = []
    for rec in recordings:
        reservoir.reset()
        y_prev = None
        for u in rec.inputs / float(SQ3_12.one):
            x = reservoir.step(u, y_prev if cfg.reservoir.feedback_enabled else None)
            y_prev = readout.predict(x)
            preds.append(int(np.argmax(y_prev)))
    return np.array(preds, dtype=np.int64)


def _labels(recordings: Sequence[EncodedRecording]) -> np.ndarray:
    if not recordings:
        return np.zeros(0, dtype=np.int64)
    return np.concatenate([r.labels for r in recordings]).astype(np.int64)


def _latency(cfg: ExperimentConfig, data: PreparedData) -> LatencyReport:
    report = throughput(cfg.topology)
    fs = data.dataset.sample_rate_hz
    if fs and not realtime_ok(report, fs):
        logging.warning(f"{report.topology} sustains {report.samples_per_sec:.0f} samples/s, "
                        f"below the {fs:.0f} Hz sensor rate")
    return report


def run_training(cfg: ExperimentConfig, data: Optional[PreparedData] = None) -> TrainingResult:
    """Trains on the training split and scores the test split (deterministic for a given config)."""
    data = data if data is not None else prepare_data(cfg)
    if not any(len(r.labels) for r in data.test):
        raise DatasetError("the test split is empty")
    labels = _labels(data.test)
    n_o = cfg.reservoir.n_o
    logging.info(f"Training '{cfg.name}' ({cfg.precision} precision, n_r={cfg.reservoir.n_r}, "
                 f"{cfg.epochs} epoch(s))")

    if cfg.precision == "float":
        reservoir, readout, history = _train_float(cfg, data)
        metrics = compute_metrics(_predict_float(cfg, reservoir, readout, data.test), labels, n_o)
        result = TrainingResult(cfg, metrics, _latency(cfg, data), float_weights=readout.w.copy(),
                                epoch_accuracy=history)
    else:
        counter = SaturationCounter()
        reservoir, readout, history = _train_fixed(cfg, data, counter)
        metrics = compute_metrics(_predict_fixed(cfg, reservoir, readout.state, data.test), labels, n_o)
        counter.report()
        readout.monitor.report()
        result = TrainingResult(cfg, metrics, _latency(cfg, data), readout=readout.state,
                                epoch_accuracy=history, saturation=dict(sorted(counter.hits.items())),
                                gradients=readout.monitor.summary())
    logging.info(f"Test accuracy {metrics.accuracy:.4f}, macro F1 {metrics.macro_f1:.4f}")
    return result


def run_eval(cfg: ExperimentConfig, state: ReadoutState, data: Optional[PreparedData] = None) -> Metrics:
    """Scores a trained fixed-point readout on the test split only."""
    data = data if data is not None else prepare_data(cfg)
    if state.n_r != cfg.reservoir.n_r or state.n_o != cfg.reservoir.n_o:
        raise ContractViolation(f"weights are {state.n_o}x{state.n_r}, config expects "
                                f"{cfg.reservoir.n_o}x{cfg.reservoir.n_r}")
    reservoir = Reservoir(cfg.reservoir)
    preds = _predict_fixed(cfg, reservoir, state, data.test)
    return compute_metrics(preds, _labels(data.test), cfg.reservoir.n_o)


# --- Noise robustness ---

def noisy_test_split(data: PreparedData, spec: NoiseSpec) -> List[EncodedRecording]:
    """Corrupts the raw test signals, then filters and normalizes with the clean-train statistics."""
    noisy = []
    for i, rec in enumerate(data.dataset.test):
        per_rec = spec.model_copy(update={"seed": spec.seed + i})
        noisy.append(Recording(rec.name, inject_noise(rec.features, per_rec), rec.labels))
    return data.encode(noisy)


def noise_sweep(cfg: ExperimentConfig, state: ReadoutState, snrs: Iterable[float],
                kinds: Iterable[NoiseKind] = (NoiseKind.UNIFORM, NoiseKind.GAUSSIAN),
                data: Optional[PreparedData] = None, bernoulli_p: float = 0.5) -> List[dict]:
    """Accuracy of a trained readout on the test split at each SNR (inf = clean)."""
    data = data if data is not None else prepare_data(cfg)
    base_seed = cfg.noise.seed if cfg.noise is not None else (cfg.global_seed or 0)
    reservoir = Reservoir(cfg.reservoir)
    labels = _labels(data.test)
    rows = []
    for kind in kinds:
        for snr in snrs:
            if math.isinf(snr):
                recs = data.test
            else:
                spec = NoiseSpec(snr_db=snr, kind=kind, bernoulli_p=bernoulli_p, seed=base_seed)
                recs = noisy_test_split(data, spec)
            metrics = compute_metrics(_predict_fixed(cfg, reservoir, state, recs), labels, cfg.reservoir.n_o)
            rows.append({"kind": NoiseKind(kind).value, "snr_db": snr, "accuracy": metrics.accuracy,
                         "macro_f1": metrics.macro_f1})
            logging.info(f"Noise {NoiseKind(kind).value} at {snr} dB: accuracy {metrics.accuracy:.4f}")
    return rows


# --- Oracle comparison ---

def compare_with_oracle(cfg: ExperimentConfig, result: TrainingResult, data: PreparedData,
                        betas: Optional[Iterable[float]] = None) -> dict:
    """Ridge readout on the very reservoir states the SGD readout saw."""
    if cfg.reservoir.feedback_enabled:
        logging.warning("Output feedback is on; the oracle sees states driven with zero feedback")
    reservoir = Reservoir(cfg.reservoir)
    scale = float(SQ3_12.one)
    X_train = np.concatenate(reservoir_states(reservoir, data.train)) / scale
    X_test = np.concatenate(reservoir_states(reservoir, data.test)) / scale
    sweep = ridge_sweep(X_train, _labels(data.train), X_test, _labels(data.test), cfg.reservoir.n_o, betas)
    return {
        "ridge": sweep["rows"],
        "best_beta": sweep["best_beta"],
        "ridge_accuracy": sweep["best_accuracy"],
        "sgd_accuracy": result.metrics.accuracy,
        "gap": sweep["best_accuracy"] - result.metrics.accuracy,
    }

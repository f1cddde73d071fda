"""
Readout layer: y_hat = pw_sigmoid(W_or x), trained online with the delta rule

    W_or <- W_or - (alpha / n_t) (y_hat - y) x^T,   alpha = 2^-alpha_shift, n_t = 1

The learning-rate multiply is an arithmetic right shift, and there is no
sigmoid-derivative factor.
"""
import json
import logging
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from esnchip.chip.fixed_point import (
    SQ3_12, FxFormat, FxValue, SaturationCounter, round_shift, saturate,
)
from esnchip.chip.rng_lfsr import LfsrState, lfsr_next_word, sparsity_mask
from esnchip.errors import ContractViolation

SNAPSHOT_MAGIC = b"ESNW"
SNAPSHOT_VERSION = 1
_HEADER = struct.Struct("<4sHHIIBB2x")


class ReadoutConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    n_o: int = Field(4, ge=1)
    alpha_shift: int = Field(5, ge=0, le=20)
    weight_bits: int = Field(24, ge=8, le=32)
    weight_frac_bits: int = Field(21, ge=1)
    init_seed: int = Field(0x2B2B, gt=0)
    init_scale_log2: int = Field(-4, le=0)
    sp_seed: int = Field(0x7E57, gt=0)
    sparse_mode: bool = False
    sp_level: float = Field(1.0, gt=0, le=1)
    lfsr_width: int = Field(16, ge=2, le=32)

    @model_validator(mode="after")
    def _check(self):
        if self.weight_frac_bits >= self.weight_bits:
            raise ValueError("weight_frac_bits must be below weight_bits")
        if self.init_seed == self.sp_seed:
            raise ValueError("readout init and SP generators need distinct seeds")
        return self

    @property
    def weight_format(self) -> FxFormat:
        return FxFormat(self.weight_bits, self.weight_frac_bits)


@dataclass
class ReadoutState:
    w: np.ndarray                 # raw codes (n_o, n_r) in fmt
    fmt: FxFormat
    alpha_shift: int
    sparse_mode: bool = False
    sp_level: float = 1.0
    sp_seed: int = 0x7E57
    lfsr_width: int = 16
    n_t: int = 1
    sp_mask: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if self.n_t != 1:
            raise ContractViolation("the on-chip trainer updates per sample (n_t = 1)")
        if self.sparse_mode and self.sp_mask is None:
            self.sp_mask = readout_mask(self.sp_seed, self.n_r, self.sp_level, self.lfsr_width)

    @property
    def n_o(self) -> int:
        return self.w.shape[0]

    @property
    def n_r(self) -> int:
        return self.w.shape[1]


@dataclass
class Prediction:
    y_hat: np.ndarray   # raw SQ3.12 in [0, 1]
    argmax_class: int

    def real(self) -> np.ndarray:
        return self.y_hat / float(1 << SQ3_12.frac_bits)


# --- Activation ---

def pw_sigmoid(z: FxValue) -> FxValue:
    """1 above 2, 0 below -2, z/4 + 0.5 in between (z/4 as a right shift by 2)."""
    one = 1 << z.fmt.frac_bits
    if z.raw > 2 * one:
        return FxValue(one, z.fmt)
    if z.raw < -2 * one:
        return FxValue(0, z.fmt)
    return FxValue((z.raw >> 2) + (one >> 1), z.fmt)


def pw_sigmoid_raw(z: np.ndarray, frac_bits: int = SQ3_12.frac_bits) -> np.ndarray:
    one = 1 << frac_bits
    mid = (z >> 2) + (one >> 1)
    return np.where(z > 2 * one, one, np.where(z < -2 * one, 0, mid))


# --- Sparse readout gate ---

def readout_mask(sp_seed: int, n_r: int, sp_level: float, width: int = 16) -> np.ndarray:
    """One accept/reject per reservoir output, from the SP-gated LFSR stream."""
    state = LfsrState.seeded(sp_seed, width)
    mask = np.zeros(n_r, dtype=bool)
    for j in range(n_r):
        state, mask[j] = sparsity_mask(state, sp_level)
    return mask


def enable_sparse_mode(state: ReadoutState, sp_level: float) -> ReadoutState:
    mask = readout_mask(state.sp_seed, state.n_r, sp_level, state.lfsr_width)
    logging.info(f"Readout switched to sparse mode: SP={sp_level}, {int(mask.sum())}/{state.n_r} inputs kept")
    return replace(state, sparse_mode=True, sp_level=sp_level, sp_mask=mask)


def disable_sparse_mode(state: ReadoutState) -> ReadoutState:
    return replace(state, sparse_mode=False, sp_level=1.0, sp_mask=None)


# --- Init ---

def init_weights(seed: int, n_o: int, n_r: int, cfg: Optional[ReadoutConfig] = None) -> ReadoutState:
    """
    Initial W_or from a dedicated LFSR: sign from the word MSB, magnitude from
    the remaining bits scaled so |w| <= 2^init_scale_log2.
    """
    cfg = cfg or ReadoutConfig(n_o=n_o)
    fmt = cfg.weight_format
    width = cfg.lfsr_width
    state = LfsrState.seeded(seed, width)
    # magnitude has width-1 bits; place its MSB just under 2^init_scale_log2
    place = fmt.frac_bits + cfg.init_scale_log2 - (width - 1)
    w = np.zeros((n_o, n_r), dtype=np.int64)
    for o in range(n_o):
        for j in range(n_r):
            state, word = lfsr_next_word(state)
            mag = word & ((1 << (width - 1)) - 1)
            mag = mag << place if place >= 0 else mag >> -place
            w[o, j] = -mag if (word >> (width - 1)) & 1 else mag
    readout = ReadoutState(
        w=w, fmt=fmt, alpha_shift=cfg.alpha_shift, sp_seed=cfg.sp_seed, lfsr_width=width,
    )
    if cfg.sparse_mode:
        readout = enable_sparse_mode(readout, cfg.sp_level)
    return readout


# --- Forward / update ---

def _gated(state: ReadoutState, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.int64)
    if x.shape != (state.n_r,):
        raise ContractViolation(f"x has shape {x.shape}, expected ({state.n_r},)")
    if state.sparse_mode:
        return np.where(state.sp_mask, x, 0)
    return x


def forward(state: ReadoutState, x: np.ndarray, counter: Optional[SaturationCounter] = None) -> Prediction:
    """x is raw SQ3.12; wide accumulation, one rounding into SQ3.12, then pw_sigmoid."""
    xg = _gated(state, x)
    acc = state.w @ xg
    z = saturate(round_shift(acc, state.fmt.frac_bits), SQ3_12, counter, "readout.sum")
    y_hat = pw_sigmoid_raw(z)
    return Prediction(y_hat=y_hat, argmax_class=int(np.argmax(y_hat)))


def one_hot(label: int, n_o: int) -> np.ndarray:
    if not 0 <= label < n_o:
        raise ContractViolation(f"label {label} outside 0..{n_o - 1}")
    y = np.zeros(n_o, dtype=np.int64)
    y[label] = SQ3_12.one
    return y


def gradient(state: ReadoutState, prediction: Prediction, y: np.ndarray, x: np.ndarray) -> np.ndarray:
    """shift_right(round((y_hat - y) x^T into the weight format), alpha_shift)."""
    err = prediction.y_hat - np.asarray(y, dtype=np.int64)
    product = np.outer(err, _gated(state, x))           # 2 * 12 fractional bits
    g = saturate(round_shift(product, 2 * SQ3_12.frac_bits - state.fmt.frac_bits), state.fmt)
    return g >> state.alpha_shift


def sgd_update(state: ReadoutState, prediction: Prediction, y: np.ndarray, x: np.ndarray,
               monitor: Optional["GradientMonitor"] = None,
               counter: Optional[SaturationCounter] = None) -> ReadoutState:
    g = gradient(state, prediction, y, x)
    if monitor is not None:
        monitor.observe(g, state.fmt)
    w = saturate(state.w - g, state.fmt, counter, "readout.weights")
    return replace(state, w=w)


def grow_readout(state: ReadoutState, n_new: int) -> ReadoutState:
    """New reservoir neurons get zero readout weights; the SP gate extends its stream."""
    if n_new < 0:
        raise ContractViolation(f"n_new must be >= 0, got {n_new}")
    w = np.concatenate([state.w, np.zeros((state.n_o, n_new), dtype=np.int64)], axis=1)
    mask = None
    if state.sparse_mode:
        mask = readout_mask(state.sp_seed, w.shape[1], state.sp_level, state.lfsr_width)
    return replace(state, w=w, sp_mask=mask)


class Readout:
    """Stateful wrapper used by the training loop."""

    def __init__(self, state: ReadoutState, monitor: Optional["GradientMonitor"] = None,
                 counter: Optional[SaturationCounter] = None):
        self.state = state
        self.monitor = monitor
        self.counter = counter

    def predict(self, x: np.ndarray) -> Prediction:
        return forward(self.state, x, self.counter)

    def train_step(self, x: np.ndarray, label: int) -> Prediction:
        prediction = forward(self.state, x, self.counter)
        y = one_hot(label, self.state.n_o)
        self.state = sgd_update(self.state, prediction, y, x, self.monitor, self.counter)
        return prediction

    def grow(self, n_new: int) -> None:
        self.state = grow_readout(self.state, n_new)


class GradientMonitor:
    """log2-magnitude histogram of nonzero per-element gradients."""

    def __init__(self):
        self.histogram: dict = {}
        self.nonzero = 0
        self.zero = 0
        self.min_abs: Optional[float] = None
        self.max_abs: Optional[float] = None

    def observe(self, g: np.ndarray, fmt: FxFormat) -> None:
        nz = g[g != 0]
        self.zero += g.size - nz.size
        if nz.size == 0:
            return
        self.nonzero += nz.size
        mags = np.abs(nz)
        exps, counts = np.unique(np.floor(np.log2(mags)).astype(np.int64) - fmt.frac_bits, return_counts=True)
        for e, c in zip(exps.tolist(), counts.tolist()):
            self.histogram[e] = self.histogram.get(e, 0) + c
        lo = float(mags.min()) / (1 << fmt.frac_bits)
        hi = float(mags.max()) / (1 << fmt.frac_bits)
        self.min_abs = lo if self.min_abs is None else min(self.min_abs, lo)
        self.max_abs = hi if self.max_abs is None else max(self.max_abs, hi)

    def summary(self) -> dict:
        return {
            "nonzero": self.nonzero,
            "zero": self.zero,
            "min_abs": self.min_abs,
            "max_abs": self.max_abs,
            "log2_histogram": {str(k): v for k, v in sorted(self.histogram.items())},
        }

    def report(self) -> None:
        logging.info(
            f"Gradient magnitudes: {self.nonzero} nonzero, {self.zero} zero, "
            f"range [{self.min_abs}, {self.max_abs}]"
        )
        for e, c in sorted(self.histogram.items()):
            logging.info(f"  2^{e}: {c}")


class FloatReadout:
    """Double-precision delta rule; piecewise sigmoid or identity output."""

    def __init__(self, w0: np.ndarray, alpha: float, activation: str = "pw_sigmoid"):
        if activation not in ("pw_sigmoid", "identity"):
            raise ContractViolation(f"unknown activation {activation!r}")
        self.w = np.asarray(w0, dtype=np.float64).copy()
        self.alpha = alpha
        self.activation = activation

    def predict(self, x: np.ndarray) -> np.ndarray:
        z = self.w @ x
        if self.activation == "identity":
            return z
        return np.clip(z / 4.0 + 0.5, 0.0, 1.0)

    def update(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Applies one delta-rule step toward target vector y; returns the weight change."""
        change = -self.alpha * np.outer(self.predict(x) - y, x)
        self.w += change
        return change

    def train_step(self, x: np.ndarray, label: int) -> np.ndarray:
        y_hat = self.predict(x)
        y = np.zeros(len(y_hat))
        y[label] = 1.0
        self.update(x, y)
        return y_hat


# --- Snapshot I/O ---

def save_weights(state: ReadoutState, path: Path, config: Optional[dict] = None) -> Path:
    """Little-endian header + int32 raw payload, plus a JSON sidecar."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = _HEADER.pack(SNAPSHOT_MAGIC, SNAPSHOT_VERSION, 0, state.n_o, state.n_r,
                          state.fmt.total_bits, state.fmt.frac_bits)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(state.w.astype("<i4").tobytes())
    sidecar = {
        "alpha_shift": state.alpha_shift,
        "sparse_mode": state.sparse_mode,
        "sp_level": state.sp_level,
        "sp_seed": state.sp_seed,
        "lfsr_width": state.lfsr_width,
        "config": config or {},
    }
    Path(f"{path}.json").write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    logging.info(f"Saved readout weights ({state.n_o}x{state.n_r}, {state.fmt}) to {path}")
    return path


def load_weights(path: Path) -> ReadoutState:
    path = Path(path)
    data = path.read_bytes()
    if len(data) < _HEADER.size:
        raise ContractViolation(f"{path}: truncated weight snapshot")
    magic, version, _, n_o, n_r, total_bits, frac_bits = _HEADER.unpack_from(data)
    if magic != SNAPSHOT_MAGIC or version != SNAPSHOT_VERSION:
        raise ContractViolation(f"{path}: not a weight snapshot (magic={magic!r}, version={version})")
    payload = np.frombuffer(data, dtype="<i4", offset=_HEADER.size)
    if payload.size != n_o * n_r:
        raise ContractViolation(f"{path}: expected {n_o * n_r} weights, found {payload.size}")
    sidecar_path = Path(f"{path}.json")
    meta = json.loads(sidecar_path.read_text()) if sidecar_path.exists() else {}
    return ReadoutState(
        w=payload.astype(np.int64).reshape(n_o, n_r),
        fmt=FxFormat(total_bits, frac_bits),
        alpha_shift=meta.get("alpha_shift", 5),
        sparse_mode=meta.get("sparse_mode", False),
        sp_level=meta.get("sp_level", 1.0),
        sp_seed=meta.get("sp_seed", 0x7E57),
        lfsr_width=meta.get("lfsr_width", 16),
    )

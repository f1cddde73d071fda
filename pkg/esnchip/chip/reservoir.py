"""
Leaky-integrated reservoir layer.

    x_hat(t) = pw_tanh(W_ri u(t) + W_r x(t-1) [+ W_f y_hat(t-1)])
    x(t)     = (1 - delta) x(t-1) + delta x_hat(t)

Weights never live in the config: they are either regenerated from the LFSR
seeds on every step (streaming mode, as the chip does) or materialized once
(cached mode). Both paths must agree bit for bit.
"""
import logging
from dataclasses import dataclass
from typing import Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from esnchip.analysis.spectral import calibrate_esp_shift
from esnchip.chip.fixed_point import (
    SQ3_12, FxArray, FxValue, SaturationCounter, quantize, round_shift, saturate,
)
from esnchip.chip.rng_lfsr import (
    WeightGenConfig, build_reservoir_matrix, build_stream_matrix, gen_weight, sparsity_mask,
)
from esnchip.errors import ContractViolation


class ReservoirConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    n_i: int = Field(3, ge=1)
    n_r: int = Field(128, ge=1)
    n_o: int = Field(4, ge=1)  # width of the optional feedback path
    sparsity: float = Field(0.1, gt=0, le=1)
    delta: float = Field(0.25, ge=0, le=1)
    feedback_enabled: bool = False
    # streaming regenerates every weight from the seeds each step, as the chip does
    weight_mode: Literal["streaming", "cached"] = "streaming"
    weights: WeightGenConfig = WeightGenConfig()

    @property
    def esp_shift(self) -> int:
        """The configured shift, or the one calibrated for this W_r (seeds, n_r, sparsity)."""
        if self.weights.esp_shift is not None:
            return self.weights.esp_shift
        return calibrate_esp_shift(self.weights, self.n_r, self.sparsity)

    @property
    def delta_raw(self) -> int:
        return quantize(self.delta, SQ3_12).raw

    @property
    def one_minus_delta_raw(self) -> int:
        # shared pair sums to exactly 1.0 so the update stays convex
        return SQ3_12.one - self.delta_raw


@dataclass
class ReservoirState:
    x: np.ndarray        # raw SQ3.12, shape (n_r,)
    x_hat: np.ndarray    # raw SQ3.12, shape (n_r,)
    y_prev: np.ndarray   # raw SQ3.12, shape (n_o,)

    @classmethod
    def zeros(cls, cfg: ReservoirConfig) -> "ReservoirState":
        return cls(
            x=np.zeros(cfg.n_r, dtype=np.int64),
            x_hat=np.zeros(cfg.n_r, dtype=np.int64),
            y_prev=np.zeros(cfg.n_o, dtype=np.int64),
        )

    def copy(self) -> "ReservoirState":
        return ReservoirState(self.x.copy(), self.x_hat.copy(), self.y_prev.copy())


@dataclass
class ReservoirWeights:
    """Raw weight codes in cfg.weights.weight_format."""
    w_in: np.ndarray     # (n_r, n_i)
    w_rec: np.ndarray    # (n_r, n_r), zero where LFSR-S rejects
    w_fb: np.ndarray     # (n_r, n_o)


# --- Weight generation ---

def materialize_weights(cfg: ReservoirConfig) -> ReservoirWeights:
    wg = cfg.weights
    if cfg.feedback_enabled:
        w_fb = build_stream_matrix(wg, wg.lfsr_f_seed, cfg.n_r, cfg.n_o, wg.input_shift)
    else:
        w_fb = np.zeros((cfg.n_r, cfg.n_o), dtype=np.int64)
    return ReservoirWeights(
        w_in=build_stream_matrix(wg, wg.lfsr_ff_seed, cfg.n_r, cfg.n_i, wg.input_shift),
        w_rec=build_reservoir_matrix(wg, cfg.n_r, cfg.sparsity, shift=cfg.esp_shift),
        w_fb=w_fb,
    )


def stream_weights(cfg: ReservoirConfig) -> ReservoirWeights:
    """
    Regenerates every weight by stepping each neuron's scalar LFSRs from their
    seeds, the way the neurons do on chip at the start of each time step.
    """
    wg = cfg.weights
    shift = cfg.esp_shift
    w_in = np.zeros((cfg.n_r, cfg.n_i), dtype=np.int64)
    w_rec = np.zeros((cfg.n_r, cfg.n_r), dtype=np.int64)
    w_fb = np.zeros((cfg.n_r, cfg.n_o), dtype=np.int64)
    for j in range(cfg.n_r):
        ff = wg.neuron_state(wg.lfsr_ff_seed, j)
        for i in range(cfg.n_i):
            ff, w = gen_weight(wg, ff, shift=wg.input_shift)
            w_in[j, i] = w.raw
        fb = wg.neuron_state(wg.lfsr_fb_seed, j)
        gate = wg.neuron_state(wg.lfsr_s_seed, j)
        for k in range(cfg.n_r):
            fb, w = gen_weight(wg, fb, shift=shift)
            gate, accept = sparsity_mask(gate, cfg.sparsity)
            if accept:
                w_rec[j, k] = w.raw
        if cfg.feedback_enabled:
            fo = wg.neuron_state(wg.lfsr_f_seed, j)
            for o in range(cfg.n_o):
                fo, w = gen_weight(wg, fo, shift=wg.input_shift)
                w_fb[j, o] = w.raw
    return ReservoirWeights(w_in, w_rec, w_fb)


# --- Datapath ---

def pw_tanh(z: FxValue) -> FxValue:
    """Piecewise tanh: clamp to [-1, 1]."""
    one = 1 << z.fmt.frac_bits
    return FxValue(max(-one, min(one, z.raw)), z.fmt)


def pw_tanh_raw(z: np.ndarray, frac_bits: int = SQ3_12.frac_bits) -> np.ndarray:
    one = 1 << frac_bits
    return np.clip(z, -one, one)


def _as_raw(v, length: int, name: str) -> np.ndarray:
    if isinstance(v, FxArray):
        if v.fmt != SQ3_12:
            raise ContractViolation(f"{name} must be {SQ3_12}, got {v.fmt}")
        raw = v.raw
    else:
        raw = np.asarray(v, dtype=np.int64)
    if raw.shape != (length,):
        raise ContractViolation(f"{name} has shape {raw.shape}, expected ({length},)")
    return raw


def pre_activation(cfg: ReservoirConfig, state: ReservoirState, u,
                   weights: Optional[ReservoirWeights] = None,
                   counter: Optional[SaturationCounter] = None) -> np.ndarray:
    """
    x_hat for this step (raw SQ3.12). The weighted sums accumulate in int64 and
    are rounded and saturated only on writeback.
    """
    u = _as_raw(u, cfg.n_i, "u")
    x = _as_raw(state.x, cfg.n_r, "x")
    if weights is None:
        weights = stream_weights(cfg)
    acc = weights.w_in @ u + weights.w_rec @ x
    if cfg.feedback_enabled:
        acc = acc + weights.w_fb @ _as_raw(state.y_prev, cfg.n_o, "y_prev")
    z = saturate(round_shift(acc, cfg.weights.weight_format.frac_bits), SQ3_12, counter, "reservoir.sum")
    return pw_tanh_raw(z)


def leaky_update(cfg: ReservoirConfig, state: ReservoirState) -> np.ndarray:
    """x(t) = (1-delta) x(t-1) + delta x_hat(t), one rounding on writeback."""
    acc = cfg.one_minus_delta_raw * state.x + cfg.delta_raw * state.x_hat
    return saturate(round_shift(acc, SQ3_12.frac_bits), SQ3_12)


def grow_reservoir(cfg: ReservoirConfig, state: ReservoirState, n_new: int) -> Tuple[ReservoirConfig, ReservoirState]:
    """
    Neurogenesis: n_new neurons appended at indices n_r..n_r+n_new-1, their
    streams coming from the same seed derivation rule; new states start at 0.
    """
    if n_new < 0:
        raise ContractViolation(f"n_new must be >= 0, got {n_new}")
    if n_new == 0:
        return cfg, state.copy()
    # the shift register keeps its value; existing neurons see the same weights
    pinned = cfg.weights.model_copy(update={"esp_shift": cfg.esp_shift})
    grown = cfg.model_copy(update={"n_r": cfg.n_r + n_new, "weights": pinned})
    pad = np.zeros(n_new, dtype=np.int64)
    new_state = ReservoirState(
        x=np.concatenate([state.x, pad]),
        x_hat=np.concatenate([state.x_hat, pad]),
        y_prev=state.y_prev.copy(),
    )
    logging.info(f"Reservoir grown from {cfg.n_r} to {grown.n_r} neurons")
    return grown, new_state


class Reservoir:
    """
    Stateful wrapper, one update at a time. In streaming mode every step
    regenerates the weights from the LFSR seeds (through the lock-step bank,
    which yields the same words as the per-neuron registers); cached mode
    materializes them once.
    """

    def __init__(self, cfg: ReservoirConfig, counter: Optional[SaturationCounter] = None):
        self.cfg = cfg
        self.state = ReservoirState.zeros(cfg)
        self.counter = counter
        self._weights = materialize_weights(cfg) if cfg.weight_mode == "cached" else None

    @property
    def weights(self) -> ReservoirWeights:
        return self._weights if self._weights is not None else materialize_weights(self.cfg)

    def reset(self, x0: Optional[np.ndarray] = None) -> None:
        self.state = ReservoirState.zeros(self.cfg)
        if x0 is not None:
            self.state.x = _as_raw(x0, self.cfg.n_r, "x0").copy()

    def step(self, u, y_prev: Optional[np.ndarray] = None) -> np.ndarray:
        if y_prev is not None:
            self.state.y_prev = np.asarray(y_prev, dtype=np.int64)
        self.state.x_hat = pre_activation(self.cfg, self.state, u, self.weights, self.counter)
        self.state.x = leaky_update(self.cfg, self.state)
        return self.state.x

    def run(self, inputs: np.ndarray) -> np.ndarray:
        """Drive a (T, n_i) raw input sequence; returns the (T, n_r) state trajectory."""
        inputs = np.asarray(inputs, dtype=np.int64)
        out = np.empty((len(inputs), self.cfg.n_r), dtype=np.int64)
        for t, u in enumerate(inputs):
            out[t] = self.step(u)
        return out

    def grow(self, n_new: int) -> None:
        self.cfg, self.state = grow_reservoir(self.cfg, self.state, n_new)
        if self._weights is not None:
            self._weights = materialize_weights(self.cfg)


class FloatReservoir:
    """Double-precision reference of the same network (same streamed weights)."""

    def __init__(self, cfg: ReservoirConfig):
        self.cfg = cfg
        wfmt = cfg.weights.weight_format
        w = materialize_weights(cfg)
        scale = float(1 << wfmt.frac_bits)
        self.w_in = w.w_in / scale
        self.w_rec = w.w_rec / scale
        self.w_fb = w.w_fb / scale
        self.delta = float(cfg.delta)
        self.x = np.zeros(cfg.n_r)
        self.y_prev = np.zeros(cfg.n_o)

    def reset(self, x0: Optional[np.ndarray] = None) -> None:
        self.x = np.zeros(self.cfg.n_r) if x0 is None else np.asarray(x0, dtype=np.float64).copy()
        self.y_prev = np.zeros(self.cfg.n_o)

    def step(self, u: np.ndarray, y_prev: Optional[np.ndarray] = None) -> np.ndarray:
        if y_prev is not None:
            self.y_prev = np.asarray(y_prev, dtype=np.float64)
        acc = self.w_in @ u + self.w_rec @ self.x
        if self.cfg.feedback_enabled:
            acc = acc + self.w_fb @ self.y_prev
        x_hat = np.clip(acc, -1.0, 1.0)
        self.x = (1.0 - self.delta) * self.x + self.delta * x_hat
        return self.x

    def run(self, inputs: np.ndarray) -> np.ndarray:
        inputs = np.asarray(inputs, dtype=np.float64)
        out = np.empty((len(inputs), self.cfg.n_r))
        for t, u in enumerate(inputs):
            out[t] = self.step(u)
        return out

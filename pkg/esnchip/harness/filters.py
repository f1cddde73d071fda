"""
Third-order (4-tap) FIR pre-filters and the feature layouts built from them.
"""
from enum import Enum
from typing import Optional

import numpy as np
from scipy import signal

from esnchip.errors import ContractViolation

FIR_TAPS = 4
DEFAULT_CUTOFF_HZ = 1.0


class FilterKind(str, Enum):
    LPF = "lpf"
    HPF = "hpf"


class FeatureMode(str, Enum):
    RAW = "raw"
    FILTERED = "filtered"      # LPF and HPF outputs per raw feature
    AUGMENTED = "augmented"    # raw, LPF and HPF per raw feature
    AUTO = "auto"              # picked from n_i

    @property
    def width_factor(self) -> int:
        return {FeatureMode.RAW: 1, FeatureMode.FILTERED: 2, FeatureMode.AUGMENTED: 3}[self]


def design_fir(kind: FilterKind, sample_rate_hz: Optional[float], cutoff_hz: float = DEFAULT_CUTOFF_HZ,
               taps: int = FIR_TAPS) -> np.ndarray:
    """
    Windowed-sinc low-pass scaled to unity DC gain; the high-pass is its
    spectral inversion around the tap just before the centre, so its
    coefficients sum to exactly zero.
    """
    if not sample_rate_hz or sample_rate_hz <= 0:
        raise ContractViolation("FIR design needs a known sample rate")
    if not 0 < cutoff_hz < sample_rate_hz / 2:
        raise ContractViolation(f"cutoff {cutoff_hz} Hz outside (0, {sample_rate_hz / 2}) Hz")
    lp = signal.firwin(taps, cutoff_hz, fs=sample_rate_hz)
    lp = lp / lp.sum()
    if FilterKind(kind) == FilterKind.LPF:
        return lp
    hp = -lp
    hp[(taps - 1) // 2] += 1.0
    return hp


def fir_filter(x: np.ndarray, kind: FilterKind, sample_rate_hz: Optional[float],
               cutoff_hz: float = DEFAULT_CUTOFF_HZ) -> np.ndarray:
    """Causal filtering along time, independently per feature column."""
    h = design_fir(kind, sample_rate_hz, cutoff_hz)
    return signal.lfilter(h, [1.0], np.asarray(x, dtype=np.float64), axis=0)


def resolve_mode(mode: FeatureMode, n_raw: int, n_i: int) -> FeatureMode:
    mode = FeatureMode(mode)
    if mode == FeatureMode.AUTO:
        for candidate in (FeatureMode.RAW, FeatureMode.FILTERED, FeatureMode.AUGMENTED):
            if candidate.width_factor * n_raw == n_i:
                return candidate
        raise ContractViolation(f"n_i={n_i} matches no feature layout of {n_raw} raw features")
    if mode.width_factor * n_raw != n_i:
        raise ContractViolation(f"{mode.value} features of {n_raw} channels give "
                                f"{mode.width_factor * n_raw} inputs, reservoir expects n_i={n_i}")
    return mode


def build_features(x: np.ndarray, mode: FeatureMode, sample_rate_hz: Optional[float],
                   cutoff_hz: float = DEFAULT_CUTOFF_HZ) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    mode = FeatureMode(mode)
    if mode == FeatureMode.RAW:
        return x
    if mode == FeatureMode.AUTO:
        raise ContractViolation("resolve the feature mode before building features")
    lp = fir_filter(x, FilterKind.LPF, sample_rate_hz, cutoff_hz)
    hp = fir_filter(x, FilterKind.HPF, sample_rate_hz, cutoff_hz)
    parts = [lp, hp] if mode == FeatureMode.FILTERED else [x, lp, hp]
    return np.concatenate(parts, axis=1)

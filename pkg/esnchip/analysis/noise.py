"""
Additive noise at a target SNR, applied to a Bernoulli-selected subset of samples.
"""
import logging
import math
from enum import Enum
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from esnchip.errors import ContractViolation, UndefinedResult


class NoiseKind(str, Enum):
    UNIFORM = "uniform"
    GAUSSIAN = "gaussian"


class NoiseSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    snr_db: float = 26.0  # math.inf leaves the signal untouched
    kind: NoiseKind = NoiseKind.GAUSSIAN
    bernoulli_p: float = Field(0.5, ge=0, le=1)
    seed: int = 0


def signal_power(signal: np.ndarray) -> float:
    return float(np.mean(np.square(signal, dtype=np.float64)))


def corruption_mask(n: int, spec: NoiseSpec, rng: np.random.Generator) -> np.ndarray:
    """One draw per sample (time step); a corrupted sample gets noise on every feature."""
    return rng.random(n) < spec.bernoulli_p


def inject_noise(signal: np.ndarray, spec: NoiseSpec, return_mask: bool = False):
    signal = np.asarray(signal, dtype=np.float64)
    if math.isnan(spec.snr_db) or spec.snr_db == -math.inf:
        raise ContractViolation(f"snr_db must be finite or +inf, got {spec.snr_db}")
    rng = np.random.default_rng(spec.seed)
    mask = corruption_mask(len(signal), spec, rng)
    if spec.snr_db == math.inf or not mask.any():
        out = signal.copy()
        return (out, mask) if return_mask else out

    # SNR is defined over the samples that actually get corrupted
    p_signal = signal_power(signal[mask])
    if p_signal == 0.0:
        raise UndefinedResult("corrupted samples have zero power; SNR is undefined")
    sigma = math.sqrt(p_signal / 10 ** (spec.snr_db / 10))

    shape = (int(mask.sum()),) + signal.shape[1:]
    if spec.kind == NoiseKind.UNIFORM:
        # U(-a, a) has variance a^2 / 3
        a = math.sqrt(3.0) * sigma
        noise = rng.uniform(-a, a, size=shape)
    else:
        noise = rng.normal(0.0, sigma, size=shape)

    out = signal.copy()
    out[mask] += noise
    logging.debug(f"Injected {spec.kind.value} noise at {spec.snr_db} dB into {shape[0]}/{len(signal)} samples")
    return (out, mask) if return_mask else out


def measured_snr_db(clean: np.ndarray, noisy: np.ndarray, mask: Optional[np.ndarray] = None) -> float:
    """Empirical SNR over the corrupted samples (all samples when mask is None)."""
    clean = np.asarray(clean, dtype=np.float64)
    noisy = np.asarray(noisy, dtype=np.float64)
    if mask is not None:
        clean, noisy = clean[mask], noisy[mask]
    p_noise = signal_power(noisy - clean)
    if p_noise == 0.0:
        return math.inf
    return 10 * math.log10(signal_power(clean) / p_noise)

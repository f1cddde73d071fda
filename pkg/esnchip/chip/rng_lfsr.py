"""
Fibonacci LFSRs that stand in for weight memory.

Every neuron owns one register per role (FF input weights, FB recurrent
weights, S sparsity selection, F output feedback); a role's per-neuron seed is
derived from the role's base seed and the neuron index. A word is the register
contents after `width` single-bit shifts.
"""
from dataclasses import dataclass, replace
from typing import Dict, Iterable, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from esnchip.chip.fixed_point import FxFormat, FxValue
from esnchip.errors import ContractViolation

# Maximal-length feedback taps (1-based bit positions), widths 2..32.
DEFAULT_TAPS: Dict[int, Tuple[int, ...]] = {
    2: (2, 1), 3: (3, 2), 4: (4, 3), 5: (5, 3), 6: (6, 5), 7: (7, 6),
    8: (8, 6, 5, 4), 9: (9, 5), 10: (10, 7), 11: (11, 9), 12: (12, 6, 4, 1),
    13: (13, 4, 3, 1), 14: (14, 5, 3, 1), 15: (15, 14), 16: (16, 15, 13, 4),
    17: (17, 14), 18: (18, 11), 19: (19, 6, 2, 1), 20: (20, 17), 21: (21, 19),
    22: (22, 21), 23: (23, 18), 24: (24, 23, 22, 17), 25: (25, 22),
    26: (26, 6, 2, 1), 27: (27, 5, 2, 1), 28: (28, 25), 29: (29, 27),
    30: (30, 6, 4, 1), 31: (31, 28), 32: (32, 22, 2, 1),
}

SEED_MULTIPLIER = 0x9E3779B1
MASK_BITS = 10  # comparator width of the sparsity gate


@dataclass(frozen=True)
class LfsrState:
    register: int
    taps: Tuple[int, ...]
    width: int

    def __post_init__(self):
        if not 2 <= self.width <= 32:
            raise ContractViolation(f"LFSR width must be in [2, 32], got {self.width}")
        if not self.taps or any(not 1 <= t <= self.width for t in self.taps):
            raise ContractViolation(f"taps {self.taps} invalid for width {self.width}")
        if not 0 <= self.register < (1 << self.width):
            raise ContractViolation(f"register {self.register:#x} wider than {self.width} bits")

    @classmethod
    def seeded(cls, seed: int, width: int = 16, taps: Optional[Iterable[int]] = None) -> "LfsrState":
        taps = tuple(taps) if taps is not None else DEFAULT_TAPS[width]
        return cls(register=seed & ((1 << width) - 1), taps=taps, width=width)


def _shift(register: int, taps: Tuple[int, ...], width: int) -> Tuple[int, int]:
    # shift toward the MSB; tap `width` is the stage leaving the register
    bit = 0
    for t in taps:
        bit ^= (register >> (t - 1)) & 1
    return ((register << 1) | bit) & ((1 << width) - 1), bit


def lfsr_step(state: LfsrState) -> Tuple[LfsrState, int]:
    """One shift; returns the new state and the feedback bit."""
    if state.register == 0:
        raise ContractViolation("all-zero LFSR register is absorbing")
    register, bit = _shift(state.register, state.taps, state.width)
    return replace(state, register=register), bit


def lfsr_next_word(state: LfsrState) -> Tuple[LfsrState, int]:
    """Advance `width` steps and return the fresh register contents."""
    if state.register == 0:
        raise ContractViolation("all-zero LFSR register is absorbing")
    register = state.register
    for _ in range(state.width):
        register, _ = _shift(register, state.taps, state.width)
    return replace(state, register=register), register


def lfsr_period(state: LfsrState) -> int:
    """Exhaustive single-step cycle length starting from state."""
    if state.register == 0:
        raise ContractViolation("all-zero LFSR register is absorbing")
    start = register = state.register
    taps, width = state.taps, state.width
    count = 0
    while True:
        register, _ = _shift(register, taps, width)
        count += 1
        if register == start:
            return count


def derive_seed(base: int, index: int, width: int = 16) -> int:
    """
    Per-neuron seed: base XOR (odd constant * (index + 1)) mod 2^width.
    Multiplying by an odd constant is a bijection mod 2^width, so seeds are
    distinct for index < 2^width - 1; the single zero outcome maps back to base.
    """
    mask = (1 << width) - 1
    if base & mask == 0:
        raise ContractViolation("base seed must be nonzero in the register width")
    seed = (base & mask) ^ (((index + 1) * SEED_MULTIPLIER) & mask)
    return seed if seed else base & mask


class WeightGenConfig(BaseModel):
    """Seeds and scaling for the on-the-fly weight generators."""
    model_config = ConfigDict(frozen=True)

    lfsr_ff_seed: int = Field(0xACE1, gt=0)
    lfsr_fb_seed: int = Field(0x1D87, gt=0)
    lfsr_s_seed: int = Field(0x5A5A, gt=0)
    lfsr_f_seed: int = Field(0x3C3C, gt=0)
    lfsr_width: int = Field(16, ge=2, le=32)
    taps: Optional[Tuple[int, ...]] = None
    # None (or "auto" in an INI file): calibrated for the reservoir it feeds
    esp_shift: Optional[int] = Field(None, ge=0)
    input_shift: int = Field(0, ge=0)
    weight_bits: int = Field(16, ge=2, le=32)

    @field_validator("esp_shift", mode="before")
    @classmethod
    def _auto_shift(cls, v):
        return None if isinstance(v, str) and v.strip().lower() == "auto" else v

    @field_validator("taps")
    @classmethod
    def _taps_sorted(cls, v):
        return tuple(sorted(v, reverse=True)) if v else None

    @model_validator(mode="after")
    def _check(self):
        seeds = [self.lfsr_ff_seed, self.lfsr_fb_seed, self.lfsr_s_seed, self.lfsr_f_seed]
        if len(set(seeds)) != len(seeds):
            raise ValueError("FF, FB, S and F generators need distinct seeds")
        if self.weight_bits > self.lfsr_width:
            raise ValueError("weight_bits cannot exceed lfsr_width")
        mask = (1 << self.lfsr_width) - 1
        if any(s & mask == 0 for s in seeds):
            raise ValueError("seeds must be nonzero within the LFSR width")
        return self

    @property
    def weight_format(self) -> FxFormat:
        # MSB is the sign, the rest a pure fraction: |w| < 1
        return FxFormat(self.weight_bits, self.weight_bits - 1)

    @property
    def resolved_taps(self) -> Tuple[int, ...]:
        return self.taps or DEFAULT_TAPS[self.lfsr_width]

    def neuron_state(self, role_seed: int, index: int) -> LfsrState:
        seed = derive_seed(role_seed, index, self.lfsr_width)
        return LfsrState(register=seed, taps=self.resolved_taps, width=self.lfsr_width)

    def neuron_seeds(self, role_seed: int, indices: Iterable[int]) -> np.ndarray:
        return np.array([derive_seed(role_seed, j, self.lfsr_width) for j in indices], dtype=np.uint64)


def fan_out_seeds(global_seed: int, width: int = 16, count: int = 6) -> Tuple[int, ...]:
    """Distinct nonzero base seeds derived from one global seed."""
    state = np.random.SeedSequence(global_seed).generate_state(count * 4, dtype=np.uint32)
    mask = (1 << width) - 1
    seeds = []
    for word in state:
        s = int(word) & mask
        if s and s not in seeds:
            seeds.append(s)
        if len(seeds) == count:
            return tuple(seeds)
    raise ContractViolation(f"could not derive {count} distinct seeds from {global_seed}")


# --- Word → weight / gate mapping ---

def _word_to_raw(word: int, weight_bits: int, shift: int, width: int) -> int:
    sign = (word >> (width - 1)) & 1
    mag = (word >> (width - weight_bits)) & ((1 << (weight_bits - 1)) - 1)
    raw = -mag if sign else mag
    return raw >> shift


def resolve_shift(cfg: WeightGenConfig, shift: Optional[int]) -> int:
    if shift is not None:
        return shift
    if cfg.esp_shift is None:
        raise ContractViolation("esp_shift is calibrated per reservoir; pass a shift or go through ReservoirConfig")
    return cfg.esp_shift


def _threshold(sp_level: float) -> int:
    if not 0 < sp_level <= 1:
        raise ContractViolation(f"sparsity level must be in (0, 1], got {sp_level}")
    return int(sp_level * (1 << MASK_BITS))


def gen_weight(cfg: WeightGenConfig, state: LfsrState, shift: Optional[int] = None) -> Tuple[LfsrState, FxValue]:
    """
    Next weight from a stream: word MSB is the sign, the next weight_bits - 1
    bits the magnitude, then an arithmetic right shift (esp_shift unless
    overridden).
    """
    state, word = lfsr_next_word(state)
    shift = resolve_shift(cfg, shift)
    return state, FxValue(_word_to_raw(word, cfg.weight_bits, shift, cfg.lfsr_width), cfg.weight_format)


def sparsity_mask(state: LfsrState, sp_level: float) -> Tuple[LfsrState, bool]:
    """Accept when the low MASK_BITS of the next word fall below sp_level * 2^MASK_BITS."""
    threshold = _threshold(sp_level)
    state, word = lfsr_next_word(state)
    return state, (word & ((1 << MASK_BITS) - 1)) < threshold


# --- Lock-step bank of registers (materialization path) ---

class LfsrBank:
    """
    Many independent registers stepped together with numpy. Produces exactly
    the words lfsr_next_word would produce for each register.
    """

    def __init__(self, seeds: np.ndarray, width: int = 16, taps: Optional[Tuple[int, ...]] = None):
        self.registers = np.asarray(seeds, dtype=np.uint64).copy()
        if (self.registers == 0).any():
            raise ContractViolation("all-zero LFSR register is absorbing")
        self.width = width
        self.taps = tuple(taps) if taps else DEFAULT_TAPS[width]
        self._mask = np.uint64((1 << width) - 1)
        self._shifts = [np.uint64(t - 1) for t in self.taps]

    def next_words(self) -> np.ndarray:
        reg = self.registers
        one = np.uint64(1)
        for _ in range(self.width):
            bit = np.zeros_like(reg)
            for s in self._shifts:
                bit ^= (reg >> s) & one
            reg = ((reg << one) | bit) & self._mask
        self.registers = reg
        return reg.copy()

    def next_weights(self, weight_bits: int, shift: int) -> np.ndarray:
        words = self.next_words().astype(np.int64)
        sign = (words >> (self.width - 1)) & 1
        mag = (words >> (self.width - weight_bits)) & ((1 << (weight_bits - 1)) - 1)
        return np.where(sign == 1, -mag, mag) >> shift

    def next_accepts(self, sp_level: float) -> np.ndarray:
        threshold = _threshold(sp_level)
        words = self.next_words().astype(np.int64)
        return (words & ((1 << MASK_BITS) - 1)) < threshold


def build_reservoir_matrix(cfg: WeightGenConfig, n_r: int, sparsity: float,
                           shift: Optional[int] = None) -> np.ndarray:
    """
    Materialized recurrent matrix W_r (raw codes in cfg.weight_format), entry
    [j, k] being what neuron j applies to x_k. Zero where LFSR-S rejects.
    """
    if n_r < 1:
        raise ContractViolation(f"n_r must be >= 1, got {n_r}")
    shift = resolve_shift(cfg, shift)
    weights = LfsrBank(cfg.neuron_seeds(cfg.lfsr_fb_seed, range(n_r)), cfg.lfsr_width, cfg.resolved_taps)
    gates = LfsrBank(cfg.neuron_seeds(cfg.lfsr_s_seed, range(n_r)), cfg.lfsr_width, cfg.resolved_taps)
    matrix = np.zeros((n_r, n_r), dtype=np.int64)
    for k in range(n_r):
        w = weights.next_weights(cfg.weight_bits, shift)
        accept = gates.next_accepts(sparsity)
        matrix[:, k] = np.where(accept, w, 0)
    return matrix


def build_stream_matrix(cfg: WeightGenConfig, role_seed: int, rows: int, cols: int,
                        shift: int, first_row: int = 0) -> np.ndarray:
    """Dense rows × cols weight block, row j streamed from role_seed's neuron first_row + j."""
    bank = LfsrBank(cfg.neuron_seeds(role_seed, range(first_row, first_row + rows)),
                    cfg.lfsr_width, cfg.resolved_taps)
    matrix = np.zeros((rows, cols), dtype=np.int64)
    for c in range(cols):
        matrix[:, c] = bank.next_weights(cfg.weight_bits, shift)
    return matrix

"""
Saturating two's-complement fixed-point arithmetic.

Scalar operations work on FxValue (Python ints, exact); the vector kernels at
the bottom of the file work on numpy int64 raw arrays and reproduce the scalar
results bit for bit. Rounding is round-to-nearest, ties away from zero,
everywhere; overflow always saturates.
"""
import logging
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational, Real

import numpy as np

from esnchip.errors import ContractViolation


@dataclass(frozen=True)
class FxFormat:
    total_bits: int
    frac_bits: int

    def __post_init__(self):
        if not 2 <= self.total_bits <= 32:
            raise ContractViolation(f"total_bits must be in [2, 32], got {self.total_bits}")
        if not 0 <= self.frac_bits < self.total_bits:
            raise ContractViolation(
                f"frac_bits must be in [0, {self.total_bits}), got {self.frac_bits}"
            )

    @property
    def int_bits(self) -> int:
        return self.total_bits - 1 - self.frac_bits

    @property
    def raw_min(self) -> int:
        return -(1 << (self.total_bits - 1))

    @property
    def raw_max(self) -> int:
        return (1 << (self.total_bits - 1)) - 1

    @property
    def one(self) -> int:
        """Raw code of 1.0 (saturated when 1.0 is out of range)."""
        return min(1 << self.frac_bits, self.raw_max)

    @property
    def resolution(self) -> Fraction:
        return Fraction(1, 1 << self.frac_bits)

    @property
    def min_real(self) -> Fraction:
        return Fraction(self.raw_min, 1 << self.frac_bits)

    @property
    def max_real(self) -> Fraction:
        return Fraction(self.raw_max, 1 << self.frac_bits)

    def __str__(self) -> str:
        return f"SQ{self.int_bits}.{self.frac_bits}"


# Named formats used by the chip.
SQ3_12 = FxFormat(16, 12)       # inputs, reservoir states, activations
WEIGHT_Q15 = FxFormat(16, 15)   # LFSR-generated reservoir weights
READOUT_24 = FxFormat(24, 21)   # readout weights in local SRAM
READOUT_25 = FxFormat(25, 21)   # literal 1+3+21 variant


@dataclass(frozen=True)
class FxValue:
    raw: int
    fmt: FxFormat

    def __post_init__(self):
        if not self.fmt.raw_min <= self.raw <= self.fmt.raw_max:
            raise ContractViolation(f"raw {self.raw} outside {self.fmt}")

    def to_fraction(self) -> Fraction:
        return Fraction(self.raw, 1 << self.fmt.frac_bits)

    def __float__(self) -> float:
        return self.raw / (1 << self.fmt.frac_bits)

    def __repr__(self) -> str:
        return f"FxValue({float(self)!r}, raw={self.raw}, {self.fmt})"


# --- Integer helpers ---

def _clip(raw: int, fmt: FxFormat) -> int:
    return max(fmt.raw_min, min(fmt.raw_max, raw))


def round_shift_int(n: int, k: int) -> int:
    """n / 2^k rounded to nearest, ties away from zero. k <= 0 shifts left."""
    if k <= 0:
        return n << -k
    half = 1 << (k - 1)
    if n >= 0:
        return (n + half) >> k
    return -((-n + half) >> k)


def _round_fraction(q: Fraction) -> int:
    """Nearest integer to q, ties away from zero."""
    mag = abs(q)
    n = math.floor(mag + Fraction(1, 2))
    return n if q >= 0 else -n


# --- Scalar operations ---

def quantize(real, fmt: FxFormat) -> FxValue:
    """Nearest representable value of fmt, ties away from zero, saturating."""
    if isinstance(real, float):
        if math.isnan(real):
            raise ContractViolation("cannot quantize NaN")
        if math.isinf(real):
            return FxValue(fmt.raw_max if real > 0 else fmt.raw_min, fmt)
    if not isinstance(real, (Rational, Real)):
        raise ContractViolation(f"cannot quantize {type(real).__name__}")
    scaled = Fraction(real) * (1 << fmt.frac_bits)
    return FxValue(_clip(_round_fraction(scaled), fmt), fmt)


def dequantize(v: FxValue) -> float:
    return float(v)


def _same_format(a: FxValue, b: FxValue) -> FxFormat:
    if a.fmt != b.fmt:
        raise ContractViolation(f"format mismatch: {a.fmt} vs {b.fmt}; convert first")
    return a.fmt


def fx_add(a: FxValue, b: FxValue) -> FxValue:
    fmt = _same_format(a, b)
    return FxValue(_clip(a.raw + b.raw, fmt), fmt)


def fx_neg(a: FxValue) -> FxValue:
    # -raw_min saturates to raw_max
    return FxValue(_clip(-a.raw, a.fmt), a.fmt)


def fx_sub(a: FxValue, b: FxValue) -> FxValue:
    fmt = _same_format(a, b)
    return FxValue(_clip(a.raw - b.raw, fmt), fmt)


def fx_mul(a: FxValue, b: FxValue, out_fmt: FxFormat) -> FxValue:
    """Full-precision product rounded into out_fmt."""
    product = a.raw * b.raw
    shift = a.fmt.frac_bits + b.fmt.frac_bits - out_fmt.frac_bits
    return FxValue(_clip(round_shift_int(product, shift), out_fmt), out_fmt)


def fx_shift_right(a: FxValue, s: int) -> FxValue:
    """Arithmetic right shift of the raw code (floor toward -inf)."""
    if not 0 <= s < a.fmt.total_bits:
        raise ContractViolation(f"shift {s} outside [0, {a.fmt.total_bits})")
    return FxValue(a.raw >> s, a.fmt)


def convert(a: FxValue, fmt: FxFormat) -> FxValue:
    raw = round_shift_int(a.raw, a.fmt.frac_bits - fmt.frac_bits)
    return FxValue(_clip(raw, fmt), fmt)


# --- Vector kernels (numpy int64 raw codes) ---

@dataclass(frozen=True)
class FxArray:
    """A numpy array of raw codes sharing one format."""
    raw: np.ndarray
    fmt: FxFormat

    def real(self) -> np.ndarray:
        return self.raw.astype(np.float64) / (1 << self.fmt.frac_bits)

    def __getitem__(self, idx) -> FxValue:
        return FxValue(int(self.raw[idx]), self.fmt)

    def __len__(self) -> int:
        return len(self.raw)

    @classmethod
    def from_values(cls, values, fmt: FxFormat) -> "FxArray":
        return cls(np.array([v.raw for v in values], dtype=np.int64), fmt)


def round_shift(raw: np.ndarray, k: int) -> np.ndarray:
    """Vector round_shift_int."""
    raw = np.asarray(raw, dtype=np.int64)
    if k <= 0:
        return np.left_shift(raw, -k)
    half = np.int64(1 << (k - 1))
    mag = (np.abs(raw) + half) >> k
    return np.where(raw < 0, -mag, mag)


def saturate(raw: np.ndarray, fmt: FxFormat, counter: "SaturationCounter | None" = None,
             where: str = "") -> np.ndarray:
    raw = np.asarray(raw, dtype=np.int64)
    if counter is not None:
        hits = int(np.count_nonzero((raw > fmt.raw_max) | (raw < fmt.raw_min)))
        if hits:
            counter.record(where, hits)
    return np.clip(raw, fmt.raw_min, fmt.raw_max)


def quantize_array(reals, fmt: FxFormat) -> np.ndarray:
    """Vector quantize for float input; NaN is rejected."""
    reals = np.asarray(reals, dtype=np.float64)
    if np.isnan(reals).any():
        raise ContractViolation("cannot quantize NaN")
    scaled = reals * float(1 << fmt.frac_bits)
    # scaling by 2^f is exact; the fractional part of the magnitude decides the tie
    whole = np.floor(np.abs(scaled))
    mag = whole + (np.abs(scaled) - whole >= 0.5)
    mag = np.minimum(mag, float(-fmt.raw_min))
    raw = np.where(scaled < 0, -mag, mag).astype(np.int64)
    return np.clip(raw, fmt.raw_min, fmt.raw_max)


class SaturationCounter:
    """Counts clipped elements per datapath so a run can report them once."""

    def __init__(self):
        self.hits: Counter = Counter()

    def record(self, where: str, count: int) -> None:
        self.hits[where] += count

    @property
    def total(self) -> int:
        return sum(self.hits.values())

    def report(self) -> None:
        if not self.hits:
            logging.info("No saturation events recorded.")
            return
        for where, count in sorted(self.hits.items()):
            logging.warning(f"Saturation hit {count} times in {where or 'unnamed datapath'}")

import math
from fractions import Fraction

import numpy as np
import pytest

from esnchip.chip.fixed_point import (
    READOUT_24, READOUT_25, SQ3_12, WEIGHT_Q15, FxFormat, FxValue, SaturationCounter, convert, dequantize, fx_add, fx_mul,
    fx_neg, fx_shift_right, fx_sub, quantize, quantize_array, round_shift, round_shift_int, saturate,
)
from esnchip.errors import ContractViolation


# --- quantize ---

def test_quantize_one():
    assert quantize(1.0, SQ3_12).raw == 4096


def test_quantize_saturates_above_range():
    assert quantize(100.0, SQ3_12).raw == 32767
    assert quantize(-100.0, SQ3_12).raw == -32768


def test_quantize_ties_away_from_zero():
    half_ulp = Fraction(1, 2 * 4096)
    assert quantize(half_ulp, SQ3_12).raw == 1
    assert quantize(-half_ulp, SQ3_12).raw == -1
    assert quantize(3 * half_ulp, SQ3_12).raw == 2


def test_quantize_rejects_nan():
    with pytest.raises(ContractViolation):
        quantize(float("nan"), SQ3_12)


def test_quantize_array_matches_scalar():
    rng = np.random.default_rng(0)
    values = np.concatenate([rng.uniform(-9, 9, 500), [0.5 / 4096, -0.5 / 4096, 1.5 / 4096, 8.0, -8.0]])
    expected = [quantize(float(v), SQ3_12).raw for v in values]
    assert quantize_array(values, SQ3_12).tolist() == expected


# --- add / mul / shift ---

def test_add_exact():
    out = fx_add(quantize(0.25, SQ3_12), quantize(0.5, SQ3_12))
    assert float(out) == 0.75


def test_add_saturates():
    out = fx_add(quantize(7.5, SQ3_12), quantize(7.5, SQ3_12))
    assert float(out) == 7.999755859375


def test_add_rejects_mixed_formats():
    with pytest.raises(ContractViolation):
        fx_add(quantize(0.5, SQ3_12), quantize(0.5, WEIGHT_Q15))


def test_neg_of_min_saturates():
    assert fx_neg(FxValue(SQ3_12.raw_min, SQ3_12)).raw == SQ3_12.raw_max


def test_sub():
    assert float(fx_sub(quantize(0.5, SQ3_12), quantize(0.75, SQ3_12))) == -0.25


def test_mul():
    out = fx_mul(quantize(0.5, SQ3_12), quantize(0.5, SQ3_12), SQ3_12)
    assert float(out) == 0.25


def test_mul_saturates():
    out = fx_mul(quantize(4.0, SQ3_12), quantize(4.0, SQ3_12), SQ3_12)
    assert out.raw == SQ3_12.raw_max


def test_shift_right():
    assert fx_shift_right(FxValue(4096, SQ3_12), 3).raw == 512
    # arithmetic shift floors toward -inf
    assert fx_shift_right(FxValue(-1, SQ3_12), 1).raw == -1


def test_shift_out_of_range():
    with pytest.raises(ContractViolation):
        fx_shift_right(FxValue(1, SQ3_12), 16)


# --- convert ---

def test_convert_widening_is_exact():
    wide = convert(quantize(0.5, SQ3_12), READOUT_24)
    assert wide.raw == 1 << 20


def test_convert_narrowing_rounds():
    tiny = FxValue(1, READOUT_24)   # 2^-21
    assert convert(tiny, SQ3_12).raw == 0


def test_convert_saturates():
    narrow = FxFormat(8, 4)
    assert convert(FxValue(SQ3_12.raw_max, SQ3_12), narrow).raw == narrow.raw_max


# --- rational oracle ---

def test_mul_agrees_with_rational_oracle():
    rng = np.random.default_rng(42)
    for _ in range(2000):
        a = FxValue(int(rng.integers(SQ3_12.raw_min, SQ3_12.raw_max + 1)), SQ3_12)
        b = FxValue(int(rng.integers(WEIGHT_Q15.raw_min, WEIGHT_Q15.raw_max + 1)), WEIGHT_Q15)
        exact = a.to_fraction() * b.to_fraction()
        assert fx_mul(a, b, SQ3_12) == quantize(exact, SQ3_12)


def test_round_shift_vector_matches_scalar():
    rng = np.random.default_rng(1)
    raw = rng.integers(-(1 << 40), 1 << 40, size=1000)
    raw = np.concatenate([raw, [6, -6, 2, -2, 0]])
    for k in (0, 1, 3, 12, 15):
        expected = [round_shift_int(int(n), k) for n in raw]
        assert round_shift(raw, k).tolist() == expected


def test_saturate_counts_hits():
    counter = SaturationCounter()
    out = saturate(np.array([40000, -40000, 5]), SQ3_12, counter, "test")
    assert out.tolist() == [32767, -32768, 5]
    assert counter.total == 2


def test_format_validation():
    with pytest.raises(ContractViolation):
        FxFormat(16, 16)
    with pytest.raises(ContractViolation):
        FxFormat(40, 12)


def test_dequantize_is_exact():
    assert dequantize(quantize(-2.375, SQ3_12)) == -2.375
    assert dequantize(FxValue(1, SQ3_12)) == 2.0 ** -12


# --- randomized oracle sweep ---

ORACLE_CASES = 20_000
FORMATS = [SQ3_12, WEIGHT_Q15, READOUT_24, FxFormat(8, 4)]


def _random_value(rng, fmt: FxFormat) -> FxValue:
    return FxValue(int(rng.integers(fmt.raw_min, fmt.raw_max + 1)), fmt)


def _nearest_raw(q: Fraction, fmt: FxFormat) -> int:
    """Nearest raw code by distance, ties to the larger magnitude, clipped."""
    scaled = q * (1 << fmt.frac_bits)
    lo = math.floor(scaled)
    d_lo, d_hi = scaled - lo, lo + 1 - scaled
    if d_lo < d_hi:
        raw = lo
    elif d_hi < d_lo:
        raw = lo + 1
    else:
        raw = lo + 1 if scaled > 0 else lo
    return max(fmt.raw_min, min(fmt.raw_max, raw))


@pytest.mark.parametrize("op", [fx_add, fx_sub])
def test_add_sub_agree_with_rational_oracle(op):
    rng = np.random.default_rng(7)
    for i in range(ORACLE_CASES):
        fmt = FORMATS[i % len(FORMATS)]
        a, b = _random_value(rng, fmt), _random_value(rng, fmt)
        exact = a.to_fraction() + b.to_fraction() if op is fx_add else a.to_fraction() - b.to_fraction()
        assert op(a, b).raw == _nearest_raw(exact, fmt)


def test_mul_randomized_against_rational_oracle():
    rng = np.random.default_rng(8)
    for i in range(ORACLE_CASES):
        fa, fb, out = FORMATS[i % 4], FORMATS[(i // 4) % 4], FORMATS[(i // 16) % 4]
        a, b = _random_value(rng, fa), _random_value(rng, fb)
        assert fx_mul(a, b, out).raw == _nearest_raw(a.to_fraction() * b.to_fraction(), out)


def test_convert_randomized_against_rational_oracle():
    rng = np.random.default_rng(9)
    for i in range(ORACLE_CASES):
        src, dst = FORMATS[i % 4], FORMATS[(i // 4) % 4]
        a = _random_value(rng, src)
        assert convert(a, dst).raw == _nearest_raw(a.to_fraction(), dst)


def test_quantize_randomized_against_rational_oracle():
    rng = np.random.default_rng(10)
    reals = rng.uniform(-10.0, 10.0, size=ORACLE_CASES)
    # exact ties of SQ3_12 and WEIGHT_Q15
    reals[::10] = rng.integers(-(1 << 16), 1 << 16, size=len(reals[::10])) / float(1 << 13)
    reals[1::10] = rng.integers(-(1 << 16), 1 << 16, size=len(reals[1::10])) / float(1 << 16)
    for i, x in enumerate(reals):
        fmt = FORMATS[i % len(FORMATS)]
        assert quantize(float(x), fmt).raw == _nearest_raw(Fraction(float(x)), fmt)


# --- algebraic properties ---

def test_quantize_is_idempotent():
    rng = np.random.default_rng(11)
    for x in rng.uniform(-12.0, 12.0, size=5000):
        for fmt in FORMATS:
            v = quantize(float(x), fmt)
            assert quantize(v.to_fraction(), fmt) == v
            assert quantize(dequantize(v), fmt) == v


def test_shift_right_is_floor_division():
    rng = np.random.default_rng(12)
    for _ in range(5000):
        a = _random_value(rng, SQ3_12)
        s = int(rng.integers(0, SQ3_12.total_bits))
        assert fx_shift_right(a, s).raw == math.floor(Fraction(a.raw, 1 << s))
        assert fx_shift_right(a, s).raw == a.raw // (1 << s)


@pytest.mark.parametrize("narrow, wide", [(SQ3_12, READOUT_25), (SQ3_12, FxFormat(32, 20)),
                                          (FxFormat(8, 4), SQ3_12), (WEIGHT_Q15, FxFormat(24, 20))])
def test_convert_wide_and_back_is_identity(narrow, wide):
    rng = np.random.default_rng(13)
    for _ in range(5000):
        a = _random_value(rng, narrow)
        widened = convert(a, wide)
        assert widened.to_fraction() == a.to_fraction()
        assert convert(widened, narrow) == a


def test_vector_kernels_bit_identical_to_scalar():
    rng = np.random.default_rng(14)
    reals = rng.uniform(-9.0, 9.0, size=20_000)
    reals[::7] = rng.integers(-(1 << 17), 1 << 17, size=len(reals[::7])) / float(1 << 13)
    for fmt in FORMATS:
        assert quantize_array(reals, fmt).tolist() == [quantize(float(x), fmt).raw for x in reals]

    raw = rng.integers(-(1 << 20), 1 << 20, size=20_000)
    for fmt in FORMATS:
        expected = [max(fmt.raw_min, min(fmt.raw_max, int(n))) for n in raw]
        assert saturate(raw, fmt).tolist() == expected

    a = rng.integers(SQ3_12.raw_min, SQ3_12.raw_max + 1, size=5000)
    w = rng.integers(WEIGHT_Q15.raw_min, WEIGHT_Q15.raw_max + 1, size=5000)
    vector = saturate(round_shift(a * w, 15), SQ3_12)
    scalar = [fx_mul(FxValue(int(x), SQ3_12), FxValue(int(y), WEIGHT_Q15), SQ3_12).raw for x, y in zip(a, w)]
    assert vector.tolist() == scalar

import numpy as np
import pytest

from esnchip.chip.fixed_point import READOUT_24, SQ3_12, quantize, quantize_array, round_shift_int
from esnchip.chip.readout import (
    FloatReadout, GradientMonitor, Readout, ReadoutConfig, ReadoutState, disable_sparse_mode,
    enable_sparse_mode, forward, grow_readout, init_weights, load_weights, one_hot, pw_sigmoid,
    save_weights, sgd_update,
)
from esnchip.errors import ContractViolation

ONE = SQ3_12.one


def _state(w, alpha_shift=5):
    return ReadoutState(w=np.asarray(w, dtype=np.int64), fmt=READOUT_24, alpha_shift=alpha_shift)


# --- activation ---

@pytest.mark.parametrize("z, expected", [(0.0, 0.5), (3.0, 1.0), (-3.0, 0.0), (1.0, 0.75), (2.0, 1.0)])
def test_pw_sigmoid(z, expected):
    assert float(pw_sigmoid(quantize(z, SQ3_12))) == expected


# --- forward ---

def test_zero_weights_predict_one_half():
    pred = forward(_state(np.zeros((4, 8))), np.full(8, ONE // 3))
    assert pred.real().tolist() == [0.5] * 4


def test_single_weight_forward():
    w = quantize(1.0, READOUT_24).raw
    pred = forward(_state([[w]]), np.array([quantize(0.5, SQ3_12).raw]))
    assert pred.real().tolist() == [0.625]


def test_argmax_picks_largest_output():
    w = np.zeros((3, 2), dtype=np.int64)
    w[2, 0] = quantize(1.0, READOUT_24).raw
    pred = forward(_state(w), np.array([ONE, 0]))
    assert pred.argmax_class == 2


def test_x_shape_checked():
    with pytest.raises(ContractViolation):
        forward(_state(np.zeros((2, 4))), np.zeros(3, dtype=np.int64))


# --- sparse mode ---

def test_full_sparsity_level_equals_dense():
    rng = np.random.default_rng(0)
    state = init_weights(0x1111, 4, 32)
    x = rng.integers(-ONE, ONE, size=32)
    dense = forward(state, x)
    sparse = forward(enable_sparse_mode(state, 1.0), x)
    assert np.array_equal(dense.y_hat, sparse.y_hat)


def test_sparse_mode_drops_inputs():
    state = enable_sparse_mode(init_weights(0x1111, 4, 256), 0.25)
    assert 0 < state.sp_mask.sum() < 256
    assert disable_sparse_mode(state).sp_mask is None


# --- update ---

def test_sgd_step_hand_computed():
    state = _state([[0]], alpha_shift=3)
    x = np.array([quantize(0.5, SQ3_12).raw])
    pred = forward(state, x)                   # 0.5
    updated = sgd_update(state, pred, np.array([0]), x)
    assert updated.w[0, 0] / (1 << READOUT_24.frac_bits) == -0.03125


def test_training_moves_toward_target():
    readout = Readout(init_weights(0x2B2B, 2, 4))
    x = np.array([ONE, ONE // 2, 0, -ONE // 2])
    before = readout.predict(x).real()[1]
    for _ in range(50):
        readout.train_step(x, 1)
    assert readout.predict(x).real()[1] > before


def test_update_bits_match_integer_reference():
    rng = np.random.default_rng(21)
    for alpha_shift in range(0, 9):
        w = rng.integers(-(1 << 18), 1 << 18, size=(3, 6))
        state = _state(w, alpha_shift)
        x = rng.integers(-ONE, ONE + 1, size=6)
        y = one_hot(int(rng.integers(0, 3)), 3)
        pred = forward(state, x)
        updated = sgd_update(state, pred, y, x)
        shift = 2 * SQ3_12.frac_bits - READOUT_24.frac_bits
        for o in range(3):
            for j in range(6):
                g = round_shift_int(int(pred.y_hat[o] - y[o]) * int(x[j]), shift)
                g = max(READOUT_24.raw_min, min(READOUT_24.raw_max, g)) >> alpha_shift
                assert updated.w[o, j] == int(w[o, j]) - g


@pytest.mark.parametrize("alpha_shift", [3, 5, 7])
def test_fixed_point_update_follows_loss_gradient(alpha_shift):
    # inside the linear part of pw_sigmoid the delta rule is the gradient of 2 * |y_hat - y|^2
    rng = np.random.default_rng(alpha_shift)
    w_real = rng.uniform(-0.1, 0.1, size=(3, 8))
    x_real = rng.uniform(-1, 1, size=8)
    label = 1
    target = np.eye(3)[label]

    def loss(w):
        y_hat = np.clip(w @ x_real / 4 + 0.5, 0.0, 1.0)
        return 2.0 * np.sum((y_hat - target) ** 2)

    eps = 1e-6
    numeric = np.zeros_like(w_real)
    for idx in np.ndindex(w_real.shape):
        bump = np.zeros_like(w_real)
        bump[idx] = eps
        numeric[idx] = (loss(w_real + bump) - loss(w_real - bump)) / (2 * eps)

    state = _state(quantize_array(w_real, READOUT_24), alpha_shift)
    x = quantize_array(x_real, SQ3_12)
    pred = forward(state, x)
    updated = sgd_update(state, pred, one_hot(label, 3), x)
    change = (updated.w - state.w) / float(1 << READOUT_24.frac_bits)
    alpha = 2.0 ** -alpha_shift
    assert np.allclose(change, -alpha * numeric, atol=alpha * 2.0 ** -9 + 2.0 ** -19)


def _separable(rng, n):
    labels = rng.integers(0, 2, size=n)
    x = rng.uniform(-0.1, 0.1, size=(n, 4))
    x[:, 2:] = rng.uniform(-0.25, 0.25, size=(n, 2))
    x[np.arange(n), labels] += 0.75
    x[np.arange(n), 1 - labels] -= 0.75
    return quantize_array(x, SQ3_12), labels


@pytest.mark.parametrize("alpha_shift", [3, 4, 5, 6, 7])
def test_online_training_separates_linearly_separable_stream(alpha_shift):
    rng = np.random.default_rng(100 + alpha_shift)
    stream, stream_labels = _separable(rng, 10_000)
    test, test_labels = _separable(rng, 200)
    readout = Readout(init_weights(0x2B2B, 2, 4, ReadoutConfig(n_o=2, alpha_shift=alpha_shift)))

    def accuracy():
        return np.mean([readout.predict(x).argmax_class == c for x, c in zip(test, test_labels)])

    reached = None
    for i, (x, c) in enumerate(zip(stream, stream_labels), start=1):
        readout.train_step(x, int(c))
        if i % 500 == 0 and accuracy() == 1.0:
            reached = i
            break
    assert reached is not None


@pytest.mark.parametrize("sp_level", [0.1, 0.25, 0.5, 0.75])
def test_sparse_update_touches_sp_fraction(sp_level):
    n_r = 2048
    state = enable_sparse_mode(init_weights(0x1111, 2, n_r), sp_level)
    x = np.full(n_r, ONE // 2)
    pred = forward(state, x)
    updated = sgd_update(state, pred, one_hot(0, 2), x)
    touched = (updated.w != state.w).any(axis=0)
    assert np.array_equal(touched, state.sp_mask)
    assert touched.mean() == pytest.approx(sp_level, abs=0.05)


def test_one_hot_rejects_bad_label():
    with pytest.raises(ContractViolation):
        one_hot(4, 4)


def test_gradient_monitor_histogram():
    monitor = GradientMonitor()
    monitor.observe(np.array([[0, 1 << 10, -(1 << 12)]]), READOUT_24)
    summary = monitor.summary()
    assert summary["nonzero"] == 2
    assert summary["zero"] == 1
    assert summary["log2_histogram"] == {"-11": 1, "-9": 1}


def test_float_readout_matches_finite_difference_gradient():
    rng = np.random.default_rng(5)
    w0 = rng.normal(size=(3, 5))
    x, y = rng.normal(size=5), rng.normal(size=3)
    alpha = 0.01
    readout = FloatReadout(w0, alpha, activation="identity")

    def loss(w):
        return 0.5 * np.sum((w @ x - y) ** 2)

    eps = 1e-6
    numeric = np.zeros_like(w0)
    for idx in np.ndindex(w0.shape):
        bump = np.zeros_like(w0)
        bump[idx] = eps
        numeric[idx] = (loss(w0 + bump) - loss(w0 - bump)) / (2 * eps)
    change = readout.update(x, y)
    assert np.allclose(change, -alpha * numeric, atol=1e-8)


# --- init ---

def test_init_magnitude_bound():
    state = init_weights(0x2B2B, 4, 128)
    assert np.abs(state.w).max() <= (1 << READOUT_24.frac_bits) >> 4


def test_init_seeds_differ():
    a = init_weights(0x2B2B, 4, 128).w
    b = init_weights(0x3C3D, 4, 128).w
    assert np.mean(a != b) >= 0.99


def test_init_respects_sparse_config():
    cfg = ReadoutConfig(n_o=2, sparse_mode=True, sp_level=0.5)
    assert init_weights(cfg.init_seed, 2, 64, cfg).sparse_mode


# --- growth and snapshots ---

def test_grow_readout_appends_zero_columns():
    state = grow_readout(init_weights(0x2B2B, 4, 8), 3)
    assert state.w.shape == (4, 11)
    assert not state.w[:, 8:].any()


def test_snapshot_round_trip(tmp_path):
    state = enable_sparse_mode(init_weights(0x2B2B, 4, 16), 0.5)
    path = save_weights(state, tmp_path / "w.bin", {"name": "t"})
    loaded = load_weights(path)
    assert np.array_equal(loaded.w, state.w)
    assert loaded.fmt == state.fmt
    assert loaded.sparse_mode and np.array_equal(loaded.sp_mask, state.sp_mask)


def test_snapshot_rejects_foreign_file(tmp_path):
    path = tmp_path / "junk.bin"
    path.write_bytes(b"not a snapshot at all, definitely")
    with pytest.raises(ContractViolation):
        load_weights(path)

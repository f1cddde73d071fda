import numpy as np
import pytest

from esnchip.chip.dataflow import (
    Topology, TopologySpec, compute_overhead, default_sigma, latency_local_rings, latency_mh_tree,
    latency_sh_tree, realtime_ok, serialization_latency, sweep_throughput, throughput,
)
from esnchip.errors import RejectedInput


# --- serialization latency (golden values) ---

@pytest.mark.parametrize("args, expected", [
    ((128, 10), 1664),   # printed prose value for this configuration is 1408
    ((1, 1), 2),
    ((64, 10), 448),
])
def test_sh_tree(args, expected):
    assert latency_sh_tree(*args) == expected


@pytest.mark.parametrize("args, expected", [
    ((32, 128, 10, 4), 480),
    ((1, 1, 1, 1), 1),
    ((32, 128, 10, 1), 384),
])
def test_local_rings(args, expected):
    assert latency_local_rings(*args) == expected


@pytest.mark.parametrize("args, expected", [
    ((128, 2, 10, 32, 4), 915),  # printed prose value for this configuration is 864
    ((64, 1, 64, 1, 1), 64),
    ((128, 2, 10, 32, 1), 819),
])
def test_mh_tree(args, expected):
    assert latency_mh_tree(*args) == expected


def test_mh_tree_needs_64_neurons_per_tree():
    with pytest.raises(RejectedInput):
        latency_mh_tree(64, 2, 10, 32, 4)


def test_kappa_below_one_rejected():
    with pytest.raises(RejectedInput):
        latency_sh_tree(128, 0.5)


def test_spec_dispatch():
    spec = TopologySpec(kind=Topology.LOCAL_RINGS, n_r=128, kappa=10, n_rows=32, n_o=4)
    assert serialization_latency(spec) == 480
    assert serialization_latency(spec.model_copy(update={"kind": Topology.SH_TREE})) == 1664
    assert serialization_latency(spec.model_copy(update={"kind": Topology.MH_TREE})) == 915


def test_default_sigma():
    assert default_sigma(128) == 2
    assert default_sigma(32) == 1
    assert default_sigma(512) == 8


# --- throughput ---

def test_flagship_throughput():
    report = throughput(TopologySpec())
    assert compute_overhead(TopologySpec()) == 4 + 8 + 384
    assert report.cycles_per_sample == 915 / 2 + 396
    assert report.samples_per_sec == pytest.approx(60_000, rel=0.15)


def test_mh_tree_beats_sh_tree():
    mh = throughput(TopologySpec())
    sh = throughput(TopologySpec(kind=Topology.SH_TREE))
    assert mh.samples_per_sec / sh.samples_per_sec >= 1.5


def test_pipelining_only_affects_mh_tree():
    sh = TopologySpec(kind=Topology.SH_TREE)
    assert throughput(sh) == throughput(sh.model_copy(update={"pipelined": False}))
    mh = TopologySpec()
    assert throughput(mh.model_copy(update={"pipelined": False})).samples_per_sec < throughput(mh).samples_per_sec


def test_throughput_never_grows_with_reservoir_size():
    for kind in Topology:
        reports = sweep_throughput(TopologySpec(), [kind], [32, 64, 128, 256, 512])
        rates = [r.samples_per_sec for r in reports]
        assert rates == sorted(rates, reverse=True)


def test_sensor_rates_met():
    report = throughput(TopologySpec())
    assert realtime_ok(report, 52)
    assert realtime_ok(report, 4000)
    assert not realtime_ok(report, 1e6)


def test_partial_recurrence_cuts_latency():
    full = serialization_latency(TopologySpec(kind=Topology.SH_TREE))
    half = serialization_latency(TopologySpec(kind=Topology.SH_TREE, recurrent_fraction=0.5))
    assert half < full


# --- randomized monotonicity ---

DRAWS = 500


def _latency(kind: str, n_r: int, kappa: float, sigma: int, n_rows: int, n_o: int) -> int:
    if kind == "sh-tree":
        return latency_sh_tree(n_r, kappa)
    if kind == "local-rings":
        return latency_local_rings(n_rows, n_r, kappa, n_o)
    return latency_mh_tree(n_r, sigma, kappa, n_rows, n_o)


def _draw(rng):
    n_r = int(rng.integers(64, 2049))
    sigma = int(rng.integers(1, n_r // 64 + 1))
    return n_r, sigma, int(rng.integers(1, 65)), int(rng.integers(1, 17))


@pytest.mark.parametrize("kind", ["sh-tree", "local-rings", "mh-tree"])
def test_latency_non_increasing_in_kappa(kind):
    rng = np.random.default_rng(31)
    for _ in range(DRAWS):
        n_r, sigma, n_rows, n_o = _draw(rng)
        k1, k2 = sorted(rng.uniform(1.0, 40.0, size=2))
        assert _latency(kind, n_r, k2, sigma, n_rows, n_o) <= _latency(kind, n_r, k1, sigma, n_rows, n_o)
    assert _latency(kind, 256, 20.0, 1, 16, 4) < _latency(kind, 256, 2.0, 1, 16, 4)


@pytest.mark.parametrize("kind", ["sh-tree", "local-rings", "mh-tree"])
def test_latency_non_decreasing_in_outputs(kind):
    rng = np.random.default_rng(32)
    for _ in range(DRAWS):
        n_r, sigma, n_rows, n_o = _draw(rng)
        kappa = float(rng.uniform(1.0, 40.0))
        assert _latency(kind, n_r, kappa, sigma, n_rows, n_o + 1) >= _latency(kind, n_r, kappa, sigma, n_rows, n_o)


def test_mh_tree_latency_non_increasing_in_sigma():
    rng = np.random.default_rng(33)
    for _ in range(DRAWS):
        n_r, _, n_rows, n_o = _draw(rng)
        kappa = float(rng.uniform(1.0, 40.0))
        s1, s2 = sorted(rng.integers(1, n_r // 64 + 1, size=2))
        assert latency_mh_tree(n_r, int(s2), kappa, n_rows, n_o) <= latency_mh_tree(n_r, int(s1), kappa, n_rows, n_o)
    assert latency_mh_tree(1024, 8, 10, 32, 4) < latency_mh_tree(1024, 2, 10, 32, 4)

"""
Serialization-latency and throughput models for the three interconnects.

    SH-Tree     l = n_r (floor(n_r / kappa) + 1)
    local rings l = n_rows (floor(n_r / kappa) + n_o - 1)
    MH-Tree     l = floor(n_r^2 / (sigma kappa)) + n_rows (n_o - 1)

The formulas are authoritative: 4x128x4 with kappa = 10 and sigma = 2 gives
1664 cycles for SH-Tree and 915 for MH-Tree.
"""
import math
from dataclasses import asdict, dataclass
from enum import Enum
from typing import Iterable, List

from pydantic import BaseModel, ConfigDict, Field

from esnchip.errors import RejectedInput

MH_MIN_NEURONS_PER_TREE = 64


class Topology(str, Enum):
    SH_TREE = "sh-tree"
    LOCAL_RINGS = "local-rings"
    MH_TREE = "mh-tree"


def default_sigma(n_r: int) -> int:
    """Largest H-Tree count keeping n_r / sigma >= 64 (at least one tree)."""
    return max(1, n_r // MH_MIN_NEURONS_PER_TREE)


class TopologySpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Topology = Topology.MH_TREE
    n_r: int = Field(128, ge=1)
    kappa: float = Field(10, ge=1)
    n_o: int = Field(4, ge=1)
    n_rows: int = Field(32, ge=1)
    sigma: int | None = Field(None, ge=1)
    channel_bits: int = Field(16, ge=1)
    clock_hz: float = Field(50e6, gt=0)
    pipelined: bool = True
    # reservoir compute: ceil(n_r / n_rows) + reservoir_overhead
    reservoir_overhead: int = Field(8, ge=0)
    # readout compute: MAC + SRAM read + SRAM write per reservoir activation
    readout_cycles_per_activation: int = Field(3, ge=0)
    # fraction of neurons allowed outgoing recurrent links
    recurrent_fraction: float = Field(1.0, gt=0, le=1)

    @property
    def resolved_sigma(self) -> int:
        return self.sigma if self.sigma is not None else default_sigma(self.n_r)

    @property
    def columns(self) -> int:
        return math.ceil(self.n_r / self.n_rows)


@dataclass
class LatencyReport:
    topology: str
    n_r: int
    kappa: float
    sigma: int
    n_rows: int
    n_o: int
    cycles: int                  # serialization latency l
    cycles_per_sample: float
    samples_per_sec: float

    def as_row(self) -> dict:
        return asdict(self)


# --- Serialization latency ---

def _fan_in(n_r: int, kappa: float) -> int:
    return math.floor(n_r / kappa)


def latency_sh_tree(n_r: int, kappa: float) -> int:
    if n_r < 1 or kappa < 1:
        raise RejectedInput(f"need n_r >= 1 and kappa >= 1, got {n_r}, {kappa}")
    return n_r * (_fan_in(n_r, kappa) + 1)


def latency_local_rings(n_rows: int, n_r: int, kappa: float, n_o: int) -> int:
    if min(n_rows, n_r, n_o) < 1 or kappa < 1:
        raise RejectedInput(f"invalid ring parameters: {n_rows}, {n_r}, {kappa}, {n_o}")
    return n_rows * (_fan_in(n_r, kappa) + n_o - 1)


def latency_mh_tree(n_r: int, sigma: int, kappa: float, n_rows: int, n_o: int) -> int:
    if min(n_r, sigma, n_rows, n_o) < 1 or kappa < 1:
        raise RejectedInput(f"invalid MH-Tree parameters: {n_r}, {sigma}, {kappa}, {n_rows}, {n_o}")
    if sigma > 1 and n_r / sigma < MH_MIN_NEURONS_PER_TREE:
        raise RejectedInput(f"MH-Tree needs n_r / sigma >= {MH_MIN_NEURONS_PER_TREE}; got {n_r}/{sigma}")
    return math.floor(n_r * n_r / (sigma * kappa)) + n_rows * (n_o - 1)


def serialization_latency(spec: TopologySpec) -> int:
    # a partial broadcast shrinks the effective recurrent fan-in
    kappa = spec.kappa / spec.recurrent_fraction
    if spec.kind == Topology.SH_TREE:
        return latency_sh_tree(spec.n_r, kappa)
    if spec.kind == Topology.LOCAL_RINGS:
        return latency_local_rings(spec.n_rows, spec.n_r, kappa, spec.n_o)
    return latency_mh_tree(spec.n_r, spec.resolved_sigma, kappa, spec.n_rows, spec.n_o)


def compute_overhead(spec: TopologySpec) -> int:
    return spec.columns + spec.reservoir_overhead + spec.readout_cycles_per_activation * spec.n_r


def throughput(spec: TopologySpec) -> LatencyReport:
    """
    cycles/sample = movement + compute overhead. A pipelined MH-Tree overlaps
    training with data movement, which halves the movement term.
    """
    cycles = serialization_latency(spec)
    movement = cycles / 2 if spec.kind == Topology.MH_TREE and spec.pipelined else cycles
    per_sample = movement + compute_overhead(spec)
    return LatencyReport(
        topology=spec.kind.value,
        n_r=spec.n_r,
        kappa=spec.kappa,
        sigma=spec.resolved_sigma,
        n_rows=spec.n_rows,
        n_o=spec.n_o,
        cycles=cycles,
        cycles_per_sample=per_sample,
        samples_per_sec=spec.clock_hz / per_sample,
    )


def sweep_throughput(base: TopologySpec, kinds: Iterable[Topology], n_r_grid: Iterable[int]) -> List[LatencyReport]:
    """Throughput per topology over an n_r grid; sigma follows default_sigma unless pinned in base."""
    n_r_grid = list(n_r_grid)
    reports = []
    for kind in kinds:
        for n_r in n_r_grid:
            reports.append(throughput(base.model_copy(update={"kind": kind, "n_r": n_r})))
    return reports


def realtime_ok(report: LatencyReport, sample_rate_hz: float) -> bool:
    return report.samples_per_sec >= sample_rate_hz

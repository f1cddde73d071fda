"""
PSO over (delta, alpha_shift, n_r, sparsity), scored by validation accuracy
on a held-out tail of every training recording.
"""
import logging
from typing import Dict, List, Optional, Tuple

from esnchip.harness.experiment import ExperimentConfig
from esnchip.harness.pso import PsoConfig, PsoResult, run_pso
from esnchip.harness.training import PreparedData, prepare_data, run_training
from esnchip.utils.sweeps import run_sweep, shared


def apply_position(base: ExperimentConfig, position: Dict[str, float]) -> ExperimentConfig:
    # n_r and sparsity move, so the ESP shift is recalibrated for every candidate
    weights = base.reservoir.weights.model_copy(update={"esp_shift": None})
    reservoir = base.reservoir.model_copy(update={
        "weights": weights,
        "delta": float(position["delta"]),
        "n_r": int(position["n_r"]),
        "sparsity": float(position["sparsity"]),
    })
    readout = base.readout.model_copy(update={"alpha_shift": int(position["alpha_shift"])})
    return base.model_copy(update={"reservoir": reservoir, "readout": readout}).with_topology_from_reservoir()


def _fitness_job(job: Tuple[ExperimentConfig, Dict[str, float]]) -> float:
    base, position = job
    return run_training(apply_position(base, position), shared()).metrics.accuracy


def pso_tune(pcfg: PsoConfig, base: ExperimentConfig, data: Optional[PreparedData] = None,
             workers: Optional[int] = None) -> Tuple[ExperimentConfig, PsoResult]:
    data = data if data is not None else prepare_data(base)
    validation = data.holdout(pcfg.validation_fraction)
    logging.info(f"PSO: {pcfg.particles} particles, {pcfg.iterations} iteration(s)")

    def fitness(positions: List[Dict[str, float]]) -> List[float]:
        return run_sweep(_fitness_job, [(base, p) for p in positions], workers, payload=validation)

    result = run_pso(pcfg, fitness)
    best = apply_position(base, result.best_position)
    logging.info(f"PSO best {result.best_position} with validation accuracy {result.best_fitness:.4f}")
    return best, result

"""
Global-best particle swarm, the host-side hyperparameter tuner.

    v <- w v + c1 r1 (pbest - p) + c2 r2 (gbest - p)
    p <- clamp(p + v)

Velocities are clamped to a fraction of each dimension's range; integer
dimensions are rounded after every move. Fitness is maximized.
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class PsoConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    particles: int = Field(50, ge=1)
    iterations: int = Field(20, ge=0)
    inertia: float = 0.72
    c1: float = 1.49
    c2: float = 1.49
    max_velocity_factor: float = Field(0.5, gt=0)
    seed: int = 0
    validation_fraction: float = Field(0.2, gt=0, lt=1)
    # search space
    delta_bounds: Tuple[float, float] = (0.05, 1.0)
    alpha_shift_bounds: Tuple[int, int] = (2, 10)
    n_r_bounds: Tuple[int, int] = (32, 512)
    sparsity_bounds: Tuple[float, float] = (0.02, 0.5)

    @model_validator(mode="after")
    def _check(self):
        for name in ("delta_bounds", "alpha_shift_bounds", "n_r_bounds", "sparsity_bounds"):
            low, high = getattr(self, name)
            if low > high:
                raise ValueError(f"{name}: lower bound {low} above upper bound {high}")
        return self

    def dimensions(self) -> List["Dimension"]:
        return [
            Dimension("delta", *self.delta_bounds),
            Dimension("alpha_shift", *self.alpha_shift_bounds, integer=True),
            Dimension("n_r", *self.n_r_bounds, integer=True),
            Dimension("sparsity", *self.sparsity_bounds),
        ]


@dataclass(frozen=True)
class Dimension:
    name: str
    low: float
    high: float
    integer: bool = False


@dataclass
class PsoResult:
    best_position: Dict[str, float]
    best_fitness: float
    history: List[float] = field(default_factory=list)   # gbest fitness after each iteration
    evaluations: int = 0


# fitness over a batch of named positions, one value each
BatchFitness = Callable[[List[Dict[str, float]]], Sequence[float]]


class ParticleSwarm:
    def __init__(self, dims: Sequence[Dimension], particles: int = 50, inertia: float = 0.72,
                 c1: float = 1.49, c2: float = 1.49, max_velocity_factor: float = 0.5, seed: int = 0):
        if not dims:
            raise ValueError("the search space needs at least one dimension")
        self.dims = list(dims)
        self.n = particles
        self.w, self.c1, self.c2 = inertia, c1, c2
        self.rng = np.random.default_rng(seed)
        self.low = np.array([d.low for d in self.dims], dtype=np.float64)
        self.high = np.array([d.high for d in self.dims], dtype=np.float64)
        self.integer = np.array([d.integer for d in self.dims])
        self.v_max = (self.high - self.low) * max_velocity_factor

        self.positions = self._snap(self.rng.uniform(self.low, self.high, size=(self.n, len(self.dims))))
        self.velocities = self.rng.uniform(-self.v_max, self.v_max, size=self.positions.shape)

    @classmethod
    def from_config(cls, cfg: PsoConfig) -> "ParticleSwarm":
        return cls(cfg.dimensions(), cfg.particles, cfg.inertia, cfg.c1, cfg.c2, cfg.max_velocity_factor, cfg.seed)

    def _snap(self, positions: np.ndarray) -> np.ndarray:
        positions = np.clip(positions, self.low, self.high)
        return np.where(self.integer, np.round(positions), positions)

    def named(self, position: np.ndarray) -> Dict[str, float]:
        return {d.name: (int(p) if d.integer else float(p)) for d, p in zip(self.dims, position)}

    def optimize(self, fitness: BatchFitness, iterations: int) -> PsoResult:
        scores = np.asarray(fitness([self.named(p) for p in self.positions]), dtype=np.float64)
        evaluations = self.n
        pbest, pbest_score = self.positions.copy(), scores.copy()
        g = int(np.argmax(pbest_score))
        history = []

        for it in range(iterations):
            r1 = self.rng.random(self.positions.shape)
            r2 = self.rng.random(self.positions.shape)
            self.velocities = (self.w * self.velocities
                               + self.c1 * r1 * (pbest - self.positions)
                               + self.c2 * r2 * (pbest[g] - self.positions))
            self.velocities = np.clip(self.velocities, -self.v_max, self.v_max)
            self.positions = self._snap(self.positions + self.velocities)

            scores = np.asarray(fitness([self.named(p) for p in self.positions]), dtype=np.float64)
            evaluations += self.n
            improved = scores > pbest_score
            pbest[improved] = self.positions[improved]
            pbest_score[improved] = scores[improved]
            g = int(np.argmax(pbest_score))
            history.append(float(pbest_score[g]))
            logging.info(f"PSO iteration {it + 1}/{iterations}: best fitness {pbest_score[g]:.4f}")

        return PsoResult(self.named(pbest[g]), float(pbest_score[g]), history, evaluations)


def run_pso(cfg: PsoConfig, fitness: BatchFitness, dims: Optional[Sequence[Dimension]] = None) -> PsoResult:
    swarm = ParticleSwarm(dims or cfg.dimensions(), cfg.particles, cfg.inertia, cfg.c1, cfg.c2,
                          cfg.max_velocity_factor, cfg.seed)
    return swarm.optimize(fitness, cfg.iterations)

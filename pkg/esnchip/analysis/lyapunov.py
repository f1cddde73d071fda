"""
Input-normalized Lyapunov exponent of a reservoir trajectory:

    lambda = k * sum_j ln(|x_j - x_nn(j)| / |u_j - u_nn(j)|)

where nn(j) is the nearest other input sample to u_j (exhaustive L2 search).
"""
import logging
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.spatial.distance import cdist

from esnchip.chip.fixed_point import SQ3_12, quantize_array
from esnchip.chip.reservoir import FloatReservoir, Reservoir
from esnchip.errors import ContractViolation, UndefinedResult

_CHUNK = 2048


class LyapunovConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    n_samples: Optional[int] = Field(None, ge=2)  # N; None uses every sample given
    k: Optional[float] = None                     # None means 1/N
    washout: int = Field(0, ge=0)                 # leading states dropped by lyapunov_for_model


@dataclass
class LyapunovResult:
    value: float
    pairs: int
    skipped_input: int   # nearest neighbour at zero input distance
    skipped_state: int   # states coincide, ln 0 undefined

    def __float__(self) -> float:
        return self.value


def nearest_neighbours(U: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Index of, and distance to, the closest other row of U for every row."""
    n = len(U)
    idx = np.empty(n, dtype=np.int64)
    dist = np.empty(n)
    for start in range(0, n, _CHUNK):
        d = cdist(U[start:start + _CHUNK], U)
        rows = np.arange(d.shape[0])
        d[rows, rows + start] = np.inf
        idx[start:start + _CHUNK] = d.argmin(axis=1)
        dist[start:start + _CHUNK] = d[rows, idx[start:start + _CHUNK]]
    return idx, dist


def lyapunov_exponent(U: np.ndarray, X: np.ndarray, cfg: Optional[LyapunovConfig] = None) -> LyapunovResult:
    cfg = cfg or LyapunovConfig()
    U = np.asarray(U, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64)
    if U.ndim == 1:
        U = U[:, None]
    if X.ndim == 1:
        X = X[:, None]
    if len(U) != len(X):
        raise ContractViolation(f"inputs and states are not aligned: {len(U)} vs {len(X)}")
    n = cfg.n_samples or len(U)
    if n < 2 or n > len(U):
        raise ContractViolation(f"need 2 <= N <= {len(U)} samples, got {n}")
    U, X = U[:n], X[:n]

    nn, _ = nearest_neighbours(U)
    # both distances through the same norm so X = U gives a ratio of exactly 1
    du = np.linalg.norm(U - U[nn], axis=1)
    dx = np.linalg.norm(X - X[nn], axis=1)
    zero_in = du == 0.0
    zero_state = ~zero_in & (dx == 0.0)
    valid = ~(zero_in | zero_state)
    if zero_in.any() or zero_state.any():
        logging.info(f"Lyapunov: skipped {int(zero_in.sum())} zero-input and "
                     f"{int(zero_state.sum())} zero-state pairs out of {n}")
    if not valid.any():
        raise UndefinedResult("every nearest-neighbour pair is degenerate")

    k = cfg.k if cfg.k is not None else 1.0 / n
    value = float(k * np.sum(np.log(dx[valid] / du[valid])))
    return LyapunovResult(value, int(valid.sum()), int(zero_in.sum()), int(zero_state.sum()))


def lyapunov_for_model(model: Union[Reservoir, FloatReservoir], U: np.ndarray,
                       cfg: Optional[LyapunovConfig] = None) -> LyapunovResult:
    """Drives a fresh copy of the model's state with real-valued U and measures lambda."""
    cfg = cfg or LyapunovConfig()
    U = np.asarray(U, dtype=np.float64)
    model.reset()
    if isinstance(model, Reservoir):
        X = model.run(quantize_array(U, SQ3_12)) / float(SQ3_12.one)
    else:
        X = model.run(U)
    U, X = U[cfg.washout:], X[cfg.washout:]
    return lyapunov_exponent(U, X, cfg.model_copy(update={"washout": 0}))

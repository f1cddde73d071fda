"""
Spectral radius of the materialized recurrent matrix and the ESP shift table.
"""
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Iterable, List

import numpy as np
from scipy.sparse.linalg import ArpackNoConvergence, eigs

from esnchip.chip.rng_lfsr import WeightGenConfig, build_reservoir_matrix, fan_out_seeds
from esnchip.errors import ContractViolation

ESP_MARGIN = 0.95
POWER_BLOCK = 16
STABLE_STEPS = 3


@dataclass
class SpectralEstimate:
    radius: float
    converged: bool
    iterations: int
    method: str  # "power", "arpack" or "dense"

    def __float__(self) -> float:
        return self.radius


def spectral_radius(W: np.ndarray, tol: float = 1e-6, max_iter: int = 10_000, seed: int = 0,
                    block: int = POWER_BLOCK) -> SpectralEstimate:
    """
    max |eigenvalue| by block power iteration with a Rayleigh-Ritz step on the
    block every iteration, so a dominant +/- or complex pair shows up as a Ritz
    pair instead of an oscillating norm ratio. The estimate counts as converged
    once the dominant Ritz pair's residual and the estimate itself have both
    stayed within tol for STABLE_STEPS consecutive iterations. Otherwise ARPACK
    (restarted Arnoldi with deflation) and then a dense solve take over, and the
    flag records that the iteration itself did not converge.
    """
    W = np.asarray(W, dtype=np.float64)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ContractViolation(f"spectral radius needs a square matrix, got {W.shape}")
    n = W.shape[0]
    if n == 0 or not W.any():
        return SpectralEstimate(0.0, True, 0, "power")

    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.standard_normal((n, min(block, n))))
    estimate, stable = 0.0, 0
    for it in range(1, max_iter + 1):
        Z = W @ Q
        if not Z.any():
            # nilpotent along this start block
            return SpectralEstimate(0.0, True, it, "power")
        H = Q.T @ Z
        vals, vecs = np.linalg.eig(H)
        k = int(np.argmax(np.abs(vals)))
        theta, y = vals[k], vecs[:, k]
        new = float(abs(theta))
        residual = float(np.linalg.norm(Z @ y - theta * (Q @ y)))
        scale = max(new, np.finfo(np.float64).tiny)
        if residual <= tol * scale and abs(new - estimate) <= tol * scale:
            stable += 1
            if stable >= STABLE_STEPS:
                return SpectralEstimate(new, True, it, "power")
        else:
            stable = 0
        estimate = new
        Q, _ = np.linalg.qr(Z)

    logging.warning(f"Power iteration did not converge in {max_iter} steps (last {estimate:.6g}); falling back")
    if n > 2:
        try:
            vals = eigs(W, k=1, which="LM", return_eigenvectors=False, tol=tol)
            return SpectralEstimate(float(np.abs(vals).max()), False, max_iter, "arpack")
        except ArpackNoConvergence:
            logging.warning("ARPACK did not converge either; using a dense eigensolve")
    return SpectralEstimate(float(np.abs(np.linalg.eigvals(W)).max()), False, max_iter, "dense")


def _seed_config(base: WeightGenConfig, seed_index: int) -> WeightGenConfig:
    ff, fb, s, f = fan_out_seeds(seed_index, base.lfsr_width, count=4)
    return base.model_copy(update={"lfsr_ff_seed": ff, "lfsr_fb_seed": fb, "lfsr_s_seed": s, "lfsr_f_seed": f})


def seed_configs(base: WeightGenConfig, seeds: int) -> List[WeightGenConfig]:
    return [_seed_config(base, i) for i in range(seeds)]


def radii_over_seeds(base: WeightGenConfig, n_r: int, sparsity: float, seeds: int = 20,
                     shift: int = 0) -> np.ndarray:
    scale = float(1 << base.weight_format.frac_bits)
    radii = []
    for cfg in seed_configs(base, seeds):
        W = build_reservoir_matrix(cfg, n_r, sparsity, shift=shift) / scale
        radii.append(spectral_radius(W).radius)
    return np.array(radii)


def _first_shift(radius: float, margin: float) -> int:
    # each shift roughly halves the radius; start one below the predicted shift
    if radius < margin:
        return 0
    return max(0, math.ceil(math.log2(radius / margin)) - 1)


def esp_shift_for_sparsity(sparsity: float, seeds: int = 20, n_r: int = 128,
                           base: WeightGenConfig | None = None, margin: float = ESP_MARGIN) -> int:
    """
    Smallest right shift s whose 20-seed mean spectral radius falls below the
    margin. Each shift halves the radius, so s never needs to exceed the
    weight width.
    """
    if not 0 < sparsity <= 1:
        raise ContractViolation(f"sparsity must be in (0, 1], got {sparsity}")
    base = base or WeightGenConfig()
    scale = float(1 << base.weight_format.frac_bits)
    unshifted = [build_reservoir_matrix(cfg, n_r, sparsity, shift=0) for cfg in seed_configs(base, seeds)]

    def mean_radius(s: int) -> float:
        return float(np.mean([spectral_radius((W >> s) / scale).radius for W in unshifted]))

    for s in range(_first_shift(mean_radius(0), margin), base.weight_bits + 1):
        mean = mean_radius(s)
        logging.debug(f"sparsity={sparsity} shift={s} mean radius={mean:.4f}")
        if mean < margin:
            logging.info(f"ESP shift for sparsity {sparsity}: {s} (mean radius {mean:.4f})")
            return s
    return base.weight_bits


@lru_cache(maxsize=256)
def calibrate_esp_shift(weights: WeightGenConfig, n_r: int, sparsity: float, margin: float = ESP_MARGIN) -> int:
    """
    Smallest shift putting this exact recurrent matrix (these seeds, n_r and
    sparsity) below the margin. Used for every reservoir whose esp_shift is
    left to calibration.
    """
    scale = float(1 << weights.weight_format.frac_bits)
    W = build_reservoir_matrix(weights, n_r, sparsity, shift=0)
    radius = spectral_radius(W / scale).radius
    for s in range(_first_shift(radius, margin), weights.weight_bits + 1):
        shifted = radius if s == 0 else spectral_radius((W >> s) / scale).radius
        if shifted < margin:
            logging.info(f"ESP shift for n_r={n_r}, sparsity={sparsity:g}: {s} (radius {shifted:.4f})")
            return s
    return weights.weight_bits


def eigen_sweep(sparsities: Iterable[float], seeds: int = 20, n_r: int = 128,
                base: WeightGenConfig | None = None, shift: int = 0) -> List[Dict]:
    """Mean, std and coefficient of variation of the radius per sparsity level."""
    base = base or WeightGenConfig()
    rows = []
    for sp in sparsities:
        radii = radii_over_seeds(base, n_r, sp, seeds, shift=shift)
        mean = float(radii.mean())
        std = float(radii.std())
        rows.append({
            "sparsity": sp,
            "shift": shift,
            "mean_radius": mean,
            "std_radius": std,
            "cv": std / mean if mean else 0.0,
            "max_radius": float(radii.max()),
        })
    return rows

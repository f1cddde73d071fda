"""
Offline ridge-regression readout, used only to bound what the on-chip SGD
trainer can reach on the same reservoir states.
"""
import logging
from typing import Dict, Iterable, List, Optional

import numpy as np
from scipy import linalg

from esnchip.errors import ContractViolation, UndefinedResult

DEFAULT_BETAS = (1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1e0)


def ridge_readout(X: np.ndarray, Y: np.ndarray, beta: float) -> np.ndarray:
    """
    W_or = (X^T X + beta I)^-1 X^T Y, solved through the SVD of X:
    W = V diag(s / (s^2 + beta)) U^T Y. Returned shaped (n_o, n_r) like the
    chip's readout.
    """
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim == 1:
        Y = Y[:, None]
    if X.ndim != 2 or len(X) != len(Y):
        raise ContractViolation(f"X {X.shape} and Y {Y.shape} are not aligned")
    if beta < 0:
        raise ContractViolation(f"beta must be >= 0, got {beta}")

    u, s, vt = linalg.svd(X, full_matrices=False)
    if beta == 0:
        cutoff = s.max(initial=0.0) * max(X.shape) * np.finfo(np.float64).eps
        if len(s) < X.shape[1] or (s <= cutoff).any():
            raise UndefinedResult("X^T X is singular; use beta > 0")
    factors = s / (s * s + beta)
    W = vt.T @ (factors[:, None] * (u.T @ Y))
    return W.T


def ridge_predict(W: np.ndarray, X: np.ndarray) -> np.ndarray:
    return np.asarray(X) @ np.asarray(W).T


def one_hot_targets(labels: np.ndarray, n_o: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    Y = np.zeros((len(labels), n_o))
    Y[np.arange(len(labels)), labels] = 1.0
    return Y


def ridge_sweep(X_train: np.ndarray, y_train: np.ndarray, X_test: np.ndarray, y_test: np.ndarray,
                n_o: int, betas: Optional[Iterable[float]] = None) -> Dict:
    """Accuracy per beta on the test states; returns rows plus the best beta."""
    Y = one_hot_targets(y_train, n_o)
    rows: List[Dict] = []
    best = None
    for beta in (betas or DEFAULT_BETAS):
        W = ridge_readout(X_train, Y, beta)
        pred = ridge_predict(W, X_test).argmax(axis=1)
        acc = float(np.mean(pred == np.asarray(y_test)))
        rows.append({"beta": beta, "accuracy": acc})
        logging.info(f"Ridge oracle beta={beta:g}: accuracy {acc:.4f}")
        if best is None or acc > best["accuracy"]:
            best = {"beta": beta, "accuracy": acc, "weights": W}
    return {"rows": rows, "best_beta": best["beta"], "best_accuracy": best["accuracy"], "weights": best["weights"]}

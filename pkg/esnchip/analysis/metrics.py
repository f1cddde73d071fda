from dataclasses import dataclass
from typing import Optional

import numpy as np

from esnchip.errors import ContractViolation


@dataclass
class Metrics:
    accuracy: float
    f1_per_class: np.ndarray
    confusion: np.ndarray   # rows = true class, columns = predicted

    @property
    def macro_f1(self) -> float:
        return float(self.f1_per_class.mean())

    def as_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "macro_f1": self.macro_f1,
            "f1_per_class": [float(f) for f in self.f1_per_class],
            "confusion": self.confusion.tolist(),
        }


def compute_metrics(predictions, labels, n_classes: Optional[int] = None) -> Metrics:
    predictions = np.asarray(predictions, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    if predictions.shape != labels.shape:
        raise ContractViolation(f"{len(predictions)} predictions for {len(labels)} labels")
    if labels.size == 0:
        raise ContractViolation("cannot score an empty prediction set")
    if n_classes is None:
        n_classes = int(max(predictions.max(), labels.max())) + 1

    confusion = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(confusion, (labels, predictions), 1)

    tp = np.diag(confusion).astype(np.float64)
    predicted = confusion.sum(axis=0)
    actual = confusion.sum(axis=1)
    precision = np.divide(tp, predicted, out=np.zeros_like(tp), where=predicted > 0)
    recall = np.divide(tp, actual, out=np.zeros_like(tp), where=actual > 0)
    denom = precision + recall
    f1 = np.divide(2 * precision * recall, denom, out=np.zeros_like(tp), where=denom > 0)

    return Metrics(
        accuracy=float(tp.sum() / confusion.sum()),
        f1_per_class=f1,
        confusion=confusion,
    )

"""Overlap metrics (precision, recall, F) and per-model averages."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from mfspf.image_core import BinaryMask

CSV_COLUMNS = (
    "image", "model", "precision", "recall", "f", "tp",
    "pred_area", "truth_area", "iterations", "converged", "elapsed_s",
)


@dataclass(frozen=True)
class MetricsRecord:
    precision: float
    recall: float
    f: float
    tp: int
    pred_area: int
    truth_area: int
    elapsed: float = 0.0
    degenerate: bool = False
    image: str = ""
    model: str = ""
    iterations: int = 0
    converged: bool = False

    def row(self) -> dict:
        return {
            "image": self.image,
            "model": self.model,
            "precision": self.precision,
            "recall": self.recall,
            "f": self.f,
            "tp": self.tp,
            "pred_area": self.pred_area,
            "truth_area": self.truth_area,
            "iterations": self.iterations,
            "converged": int(self.converged),
            "elapsed_s": self.elapsed,
        }


def f_value(precision: float, recall: float) -> float:
    s = precision + recall
    return 2.0 * precision * recall / s if s > 0 else 0.0


def compare_masks(pred, truth, **tags) -> MetricsRecord:
    """Pixelwise precision, recall and F of ``pred`` against ``truth``.

    Empty-set conventions: no prediction gives precision 0, empty truth
    gives recall 0, and two empty masks score 1 across the board with
    ``degenerate`` set. Extra keyword arguments are stored on the record.
    """
    p = pred.data if isinstance(pred, BinaryMask) else np.asarray(pred, dtype=bool)
    t = truth.data if isinstance(truth, BinaryMask) else np.asarray(truth, dtype=bool)
    if p.shape != t.shape:
        raise ValueError(f"mask shapes differ: {p.shape} vs {t.shape}")
    tp = int(np.count_nonzero(p & t))
    n_pred = int(np.count_nonzero(p))
    n_truth = int(np.count_nonzero(t))
    if n_pred == 0 and n_truth == 0:
        return MetricsRecord(1.0, 1.0, 1.0, 0, 0, 0, degenerate=True, **tags)
    precision = tp / n_pred if n_pred else 0.0
    recall = tp / n_truth if n_truth else 0.0
    return MetricsRecord(precision, recall, f_value(precision, recall), tp, n_pred, n_truth, **tags)


@dataclass(frozen=True)
class ModelSummary:
    model: str
    count: int
    mean_f: float
    mean_elapsed: float
    mean_precision: float
    mean_recall: float


def timing_summary(records) -> list[ModelSummary]:
    """Mean F, precision, recall and running time per model, in first-seen model order."""
    records = list(records)
    if not records:
        raise ValueError("timing_summary needs at least one record")
    groups: dict[str, list[MetricsRecord]] = {}
    for r in records:
        groups.setdefault(r.model, []).append(r)
    out = []
    for model, rs in groups.items():
        k = len(rs)
        out.append(ModelSummary(
            model=model,
            count=k,
            mean_f=sum(r.f for r in rs) / k,
            mean_elapsed=sum(r.elapsed for r in rs) / k,
            mean_precision=sum(r.precision for r in rs) / k,
            mean_recall=sum(r.recall for r in rs) / k,
        ))
    return out

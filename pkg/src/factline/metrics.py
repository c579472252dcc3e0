"""Evaluation metrics: confusion matrices, macro/micro F1, bucket breakdowns."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import IO, Optional, Sequence

import numpy as np

from .errors import ValidationError


def confusion_matrix(
    golds: Sequence[int], preds: Sequence[int], n_classes: int
) -> np.ndarray:
    if len(golds) != len(preds):
        raise ValidationError("gold and prediction lists differ in length")
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    for g, p in zip(golds, preds):
        cm[g, p] += 1
    return cm


def f1_from_confusion(cm: np.ndarray) -> dict:
    """Macro F1 (unweighted class mean, 0 for empty denominators) and micro F1."""
    n_classes = cm.shape[0]
    per_class = []
    for c in range(n_classes):
        tp = cm[c, c]
        fp = cm[:, c].sum() - tp
        fn = cm[c, :].sum() - tp
        denom = 2 * tp + fp + fn
        per_class.append(0.0 if denom == 0 else 2.0 * tp / denom)
    total = cm.sum()
    tp_total = np.trace(cm)
    micro = 0.0 if total == 0 else tp_total / total
    return {
        "macro_f1": float(np.mean(per_class)),
        "micro_f1": float(micro),
        "accuracy": float(micro),
        "per_class_f1": [float(v) for v in per_class],
        "n": int(total),
    }


@dataclass
class MetricsReport:
    """Scores for one evaluation run, with per-bucket breakdowns."""

    n: int
    claim: dict
    claim_confusion: list
    order: Optional[dict] = None
    order_confusion: Optional[list] = None
    event: Optional[dict] = None
    event_confusion: Optional[list] = None
    buckets: dict = field(default_factory=dict)
    consistency_violation_rate: Optional[float] = None

    @property
    def macro_f1(self) -> float:
        return self.claim["macro_f1"]

    @property
    def micro_f1(self) -> float:
        return self.claim["micro_f1"]

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "claim": self.claim,
            "claim_confusion": self.claim_confusion,
            "order": self.order,
            "order_confusion": self.order_confusion,
            "event": self.event,
            "event_confusion": self.event_confusion,
            "buckets": self.buckets,
            "consistency_violation_rate": self.consistency_violation_rate,
        }

    def render(self, fh: IO[str]) -> None:
        fh.write(
            f"claims={self.n} macro_f1={self.macro_f1:.4f} "
            f"micro_f1={self.micro_f1:.4f}\n"
        )
        if self.consistency_violation_rate is not None:
            fh.write(
                f"consistency_violation_rate={self.consistency_violation_rate:.4f}\n"
            )
        for axis, rows in self.buckets.items():
            fh.write(f"[{axis}]\n")
            for bucket, scores in rows.items():
                fh.write(
                    f"  {bucket}: n={scores['n']} macro_f1={scores['macro_f1']:.4f} "
                    f"micro_f1={scores['micro_f1']:.4f}\n"
                )


def bucket_scores(
    golds: Sequence[int],
    preds: Sequence[int],
    tags: Sequence,
    n_classes: int,
) -> dict:
    """Per-bucket F1 for one tagging axis; buckets partition the examples."""
    out: dict = {}
    for value in sorted(set(tags), key=str):
        idx = [i for i, t in enumerate(tags) if t == value]
        cm = confusion_matrix([golds[i] for i in idx], [preds[i] for i in idx], n_classes)
        out[str(value)] = f1_from_confusion(cm)
    return out

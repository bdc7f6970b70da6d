"""Evaluation metrics and result tables.

Frame accuracy follows the transcription convention: predictions are
binarized at a strict threshold (p > 0.5; exactly 0.5 counts negative)
and ACC = sum TP / sum(TP + FP + FN), micro-averaged over every valid
timestep of every sequence. True negatives never enter, so all-silent
frames predicted silent contribute nothing.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .data import to_batches
from .model import SequenceModel
from .training import bce_nll

__all__ = ["FrameCounts", "count_frames", "accuracy", "evaluate", "emit_table", "REPORT_COLUMNS"]


@dataclass
class FrameCounts:
    """True/false positive and false negative totals over timesteps."""

    tp: int = 0
    fp: int = 0
    fn: int = 0

    def add(self, other: "FrameCounts") -> None:
        self.tp += other.tp
        self.fp += other.fp
        self.fn += other.fn

    @property
    def accuracy(self) -> float:
        denom = self.tp + self.fp + self.fn
        return 1.0 if denom == 0 else self.tp / denom


def count_frames(predictions, targets, mask=None, threshold: float = 0.5) -> FrameCounts:
    p = np.asarray(predictions, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    if p.shape != y.shape:
        raise ValueError(f"predictions {p.shape} vs targets {y.shape}")
    pos = p > threshold
    true = y > 0.5
    if mask is not None:
        m = np.asarray(mask, dtype=bool)[..., None]
        pos = pos & m
        true = true & m
    return FrameCounts(
        tp=int(np.sum(pos & true)),
        fp=int(np.sum(pos & ~true)),
        fn=int(np.sum(~pos & true)),
    )


def accuracy(predictions, targets, mask=None, threshold: float = 0.5) -> float:
    """ACC = sum TP / sum(TP + FP + FN); 1.0 when nothing is active or predicted."""
    return count_frames(predictions, targets, mask, threshold).accuracy


def evaluate(model: SequenceModel, split, batch_size: int = 16) -> tuple[float, float]:
    """(per-timestep NLL, frame accuracy) on a split; dropout disabled."""
    counts = FrameCounts()
    nll_total, steps = 0.0, 0.0
    for batch in to_batches(split, batch_size, seed=None):
        probs, _ = model.forward(batch.inputs, train=False)
        n = batch.mask.sum()
        nll_total += bce_nll(probs, batch.targets, batch.mask) * n
        steps += n
        counts.add(count_frames(probs, batch.targets, batch.mask))
    nll = nll_total / steps if steps else 0.0
    return float(nll), float(counts.accuracy)


REPORT_COLUMNS = [
    "model_kind",
    "rank_config",
    "param_count",
    "lr",
    "dropout",
    "train_nll",
    "valid_nll",
    "test_nll",
    "test_acc",
    "epochs",
    "wall_time_s",
]


def emit_table(reports: list[dict], csv_path=None, json_path=None) -> list[dict]:
    """One row per grid winner, sorted by parameter count within model kind.

    ``reports`` entries carry at least the REPORT_COLUMNS keys. Writes
    RFC-4180 CSV and/or JSON when paths are given; returns the sorted rows.
    """
    rows = sorted(
        (dict(r) for r in reports),
        key=lambda r: (str(r.get("model_kind", "")), int(r.get("param_count", 0))),
    )
    if csv_path is not None:
        with open(csv_path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=REPORT_COLUMNS, extrasaction="ignore")
            writer.writeheader()
            writer.writerows(rows)
    if json_path is not None:
        with open(json_path, "w", encoding="utf-8") as fh:
            json.dump(rows, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return rows

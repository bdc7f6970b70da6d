"""Piano-roll datasets: loading, binarization, batching, masking.

The canonical on-disk format is JSON:

    {"name": "...", "splits": {"train": [...], "valid": [...], "test": [...]}}

where each split is a list of sequences, each sequence a list of
timesteps, and each timestep a list of active note indices in [0, 88)
(0 = lowest piano key, i.e. MIDI pitch 21 in the source corpora). A
timestep's binary vector has a 1 exactly at its active notes.

Batches frame next-step prediction: target frame t equals input frame
t + 1, so a sequence of length L contributes L - 1 prediction positions
and sequences shorter than 2 are dropped. Padded positions are all-zero
with mask 0.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import DataError

NUM_NOTES = 88
SPLIT_NAMES = ("train", "valid", "test")

__all__ = ["NUM_NOTES", "SPLIT_NAMES", "PianoRollDataset", "Batch", "load_dataset", "to_batches", "sequence_to_frames"]


@dataclass(frozen=True)
class PianoRollDataset:
    """Named train/valid/test splits of note-index sequences."""

    name: str
    splits: dict[str, list[list[tuple[int, ...]]]]

    def split(self, name: str):
        if name not in self.splits:
            raise DataError(f"dataset {self.name!r} has no split {name!r}")
        return self.splits[name]


@dataclass
class Batch:
    """Padded next-step-prediction arrays for a group of sequences."""

    inputs: np.ndarray  # (B, T, 88) float64 binary
    targets: np.ndarray  # (B, T, 88), targets[:, t] == next frame after inputs[:, t]
    mask: np.ndarray  # (B, T), 1.0 on valid prediction positions

    @property
    def num_predictions(self) -> int:
        return int(self.mask.sum())


def _validate_sequence(seq, where: str):
    out = []
    for t, step in enumerate(seq):
        if not isinstance(step, (list, tuple)):
            raise DataError(f"{where}, timestep {t}: expected a list of notes, got {type(step).__name__}")
        notes = []
        for n in step:
            if not isinstance(n, int) or isinstance(n, bool):
                raise DataError(f"{where}, timestep {t}: note {n!r} is not an integer")
            if not 0 <= n < NUM_NOTES:
                raise DataError(f"{where}, timestep {t}: note {n} outside [0, {NUM_NOTES})")
            notes.append(n)
        if len(set(notes)) != len(notes):
            raise DataError(f"{where}, timestep {t}: duplicate notes {sorted(notes)}")
        out.append(tuple(sorted(notes)))
    return out


def load_dataset(path) -> PianoRollDataset:
    """Parse and validate a canonical piano-roll JSON file."""
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as e:
        raise DataError(f"cannot read dataset {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise DataError(f"{path} is not valid JSON: {e}") from e
    if not isinstance(raw, dict) or "splits" not in raw:
        raise DataError(f"{path} lacks a 'splits' object")
    splits = {}
    for split in SPLIT_NAMES:
        if split not in raw["splits"]:
            raise DataError(f"{path} is missing split {split!r}")
        seqs = raw["splits"][split]
        splits[split] = [
            _validate_sequence(seq, f"{path} [{split} #{i}]") for i, seq in enumerate(seqs)
        ]
    return PianoRollDataset(name=str(raw.get("name", "unnamed")), splits=splits)


def sequence_to_frames(seq) -> np.ndarray:
    """Binary (T, 88) matrix of one sequence."""
    frames = np.zeros((len(seq), NUM_NOTES))
    for t, notes in enumerate(seq):
        frames[t, list(notes)] = 1.0
    return frames


def to_batches(split, batch_size: int, seed: int | None = 0) -> list[Batch]:
    """Group a split into padded next-step batches.

    The shuffle is deterministic in ``seed``; pass ``seed=None`` to keep
    the split order (evaluation). Sequences shorter than 2 timesteps have
    no prediction positions and are dropped.
    """
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    usable = [seq for seq in split if len(seq) >= 2]
    order = np.arange(len(usable))
    if seed is not None:
        np.random.default_rng(seed).shuffle(order)
    batches = []
    for start in range(0, len(usable), batch_size):
        group = [usable[i] for i in order[start : start + batch_size]]
        b = len(group)
        t_max = max(len(seq) - 1 for seq in group)
        inputs = np.zeros((b, t_max, NUM_NOTES))
        targets = np.zeros((b, t_max, NUM_NOTES))
        mask = np.zeros((b, t_max))
        for i, seq in enumerate(group):
            frames = sequence_to_frames(seq)
            t = len(seq) - 1
            inputs[i, :t] = frames[:-1]
            targets[i, :t] = frames[1:]
            mask[i, :t] = 1.0
        batches.append(Batch(inputs=inputs, targets=targets, mask=mask))
    return batches

"""Deterministic chorale-style demo corpus.

Generates four-voice polyphonic pieces with functional harmony, stepwise
voice leading, and sustained chords, then writes them either in the
canonical piano-roll JSON format (note indices 0..87) or in the upstream
distribution's serialized layout (a pickle of train/valid/test lists of
MIDI-pitch tuples) for exercising converters.

The corpus is a stand-in for the real polyphonic benchmark files, which
must be downloaded separately; statistics (voice count, pitch ranges,
piece lengths, note persistence) are chosen to resemble chorales so that
desk-scale training behaves like the real task.

Usage: python -m tensorcells.demo_data OUT --seed 7 [--format json|pickle]
"""

from __future__ import annotations

import argparse
import json
import pickle
import sys

import numpy as np

PITCH_BASE = 21  # lowest piano key (A0)

# (low, high) inclusive MIDI ranges per voice, bass to soprano
VOICE_RANGES = ((40, 57), (48, 65), (55, 72), (60, 79))

MAJOR_SCALE = (0, 2, 4, 5, 7, 9, 11)

# scale-degree triads and a functional-harmony transition table
_DEGREES = (0, 1, 2, 3, 4, 5)  # I ii iii IV V vi
_TRANSITIONS = {
    0: ((0, 0.15), (1, 0.15), (2, 0.05), (3, 0.25), (4, 0.25), (5, 0.15)),
    1: ((4, 0.6), (2, 0.1), (3, 0.1), (0, 0.2)),
    2: ((5, 0.5), (3, 0.3), (0, 0.2)),
    3: ((4, 0.4), (0, 0.3), (1, 0.2), (5, 0.1)),
    4: ((0, 0.6), (5, 0.25), (4, 0.15)),
    5: ((3, 0.35), (1, 0.35), (4, 0.2), (0, 0.1)),
}


def _triad_classes(tonic: int, degree: int) -> tuple[int, int, int]:
    root = MAJOR_SCALE[degree]
    third = MAJOR_SCALE[(degree + 2) % 7]
    fifth = MAJOR_SCALE[(degree + 4) % 7]
    return tuple((tonic + pc) % 12 for pc in (root, third, fifth))


def _nearest_in_range(prev: int, pitch_class: int, low: int, high: int) -> int:
    candidates = [p for p in range(low, high + 1) if p % 12 == pitch_class]
    return min(candidates, key=lambda p: (abs(p - prev), p))


def generate_piece(rng: np.random.Generator) -> list[tuple[int, ...]]:
    """One piece as a list of timesteps of sorted MIDI pitches."""
    tonic = int(rng.integers(0, 12))
    n_chords = int(rng.integers(12, 28))
    degree = 0
    voices = [int((lo + hi) // 2) for lo, hi in VOICE_RANGES]
    steps: list[tuple[int, ...]] = []
    for chord_i in range(n_chords):
        classes = _triad_classes(tonic, degree)
        # bass takes the root; upper voices move to their nearest chord tone
        assignment = (classes[0], classes[int(rng.integers(0, 3))],
                      classes[int(rng.integers(0, 3))], classes[int(rng.integers(0, 3))])
        for v, (pc, (lo, hi)) in enumerate(zip(assignment, VOICE_RANGES)):
            voices[v] = _nearest_in_range(voices[v], pc, lo, hi)
        duration = int(rng.integers(2, 5))
        if chord_i == n_chords - 1:
            duration += 2  # final fermata
        steps.extend([tuple(sorted(set(voices)))] * duration)
        moves = _TRANSITIONS[degree]
        probs = np.array([w for _, w in moves])
        degree = int(rng.choice([d for d, _ in moves], p=probs / probs.sum()))
    return steps


def generate_corpus(seed: int, counts=(120, 24, 24), name: str = "demo-chorales") -> dict:
    """Canonical JSON structure with 0-based note indices."""
    rng = np.random.default_rng(np.random.SeedSequence((0xC0DA, seed)))
    splits = {}
    for split, count in zip(("train", "valid", "test"), counts):
        seqs = []
        for _ in range(count):
            piece = generate_piece(rng)
            seqs.append([[p - PITCH_BASE for p in step] for step in piece])
        splits[split] = seqs
    return {"name": name, "splits": splits}


def corpus_to_upstream_pickle(corpus: dict) -> dict:
    """The upstream layout: split -> list of sequences of MIDI-pitch tuples."""
    return {
        split: [[tuple(n + PITCH_BASE for n in step) for step in seq] for seq in seqs]
        for split, seqs in corpus["splits"].items()
    }


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="Write a deterministic chorale-style demo corpus.")
    parser.add_argument("out", help="output path")
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--format", choices=("json", "pickle"), default="json")
    parser.add_argument("--counts", default="120,24,24", help="train,valid,test piece counts")
    parser.add_argument("--name", default="demo-chorales")
    args = parser.parse_args(argv)
    counts = tuple(int(c) for c in args.counts.split(","))
    if len(counts) != 3:
        parser.error("--counts needs three comma-separated integers")
    corpus = generate_corpus(args.seed, counts, args.name)
    if args.format == "json":
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(corpus, fh)
            fh.write("\n")
    else:
        with open(args.out, "wb") as fh:
            pickle.dump(corpus_to_upstream_pickle(corpus), fh, protocol=2)
    total = sum(len(s) for s in corpus["splits"].values())
    steps = sum(len(seq) for s in corpus["splits"].values() for seq in s)
    print(f"wrote {args.out}: {total} pieces, {steps} timesteps")
    return 0


if __name__ == "__main__":
    sys.exit(main())

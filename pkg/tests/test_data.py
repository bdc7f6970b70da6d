import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tensorcells.data import NUM_NOTES, load_dataset, sequence_to_frames, to_batches
from tensorcells.demo_data import generate_corpus
from tensorcells.errors import DataError


def write_dataset(tmp_path, splits, name="test"):
    path = tmp_path / "data.json"
    path.write_text(json.dumps({"name": name, "splits": splits}))
    return path


def full_splits(train, valid=None, test=None):
    return {"train": train, "valid": valid or [], "test": test or []}


class TestLoadDataset:
    def test_echoes_sequences(self, tmp_path):
        path = write_dataset(tmp_path, full_splits([[[60], [60, 64], []]]))
        ds = load_dataset(path)
        assert ds.split("train") == [[(60,), (60, 64), ()]]

    def test_note_out_of_range(self, tmp_path):
        path = write_dataset(tmp_path, full_splits([[[88]]]))
        with pytest.raises(DataError):
            load_dataset(path)
        path = write_dataset(tmp_path, full_splits([[[-1]]]))
        with pytest.raises(DataError):
            load_dataset(path)

    def test_duplicate_notes_rejected(self, tmp_path):
        path = write_dataset(tmp_path, full_splits([[[60, 60]]]))
        with pytest.raises(DataError):
            load_dataset(path)

    def test_missing_split(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"name": "x", "splits": {"train": [], "valid": []}}))
        with pytest.raises(DataError):
            load_dataset(path)

    def test_unparseable_file(self, tmp_path):
        path = tmp_path / "junk.json"
        path.write_text("{not json")
        with pytest.raises(DataError):
            load_dataset(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            load_dataset(tmp_path / "absent.json")

    def test_demo_corpus_validates(self, tmp_path):
        path = tmp_path / "demo.json"
        path.write_text(json.dumps(generate_corpus(3, counts=(8, 2, 2))))
        ds = load_dataset(path)
        for split in ("train", "valid", "test"):
            for seq in ds.split(split):
                assert len(seq) > 0
                for step in seq:
                    assert all(0 <= n < NUM_NOTES for n in step)

    def test_loading_is_idempotent(self, tmp_path):
        path = write_dataset(tmp_path, full_splits([[[1], [2, 3]], [[4]]]))
        assert load_dataset(path).splits == load_dataset(path).splits


class TestBinarization:
    def test_entry_set_iff_note_active(self):
        frames = sequence_to_frames([(0, 87), (), (40,)])
        assert frames.shape == (3, 88)
        assert frames[0, 0] == 1.0 and frames[0, 87] == 1.0 and frames[0].sum() == 2
        assert frames[1].sum() == 0
        assert frames[2, 40] == 1.0 and frames[2].sum() == 1


class TestToBatches:
    def test_single_sequence_framing(self):
        batches = to_batches([[(60,), (60, 64), ()]], batch_size=4)
        assert len(batches) == 1
        b = batches[0]
        assert b.inputs.shape == (1, 2, 88)
        assert b.mask.sum() == 2
        # target at t equals input at t+1
        np.testing.assert_array_equal(b.targets[0, 0], b.inputs[0, 1])

    def test_padding_and_mask_sums(self):
        seqs = [[(1,), (2,)], [(3,), (4,), (5,), (6,)]]
        batches = to_batches(seqs, batch_size=2, seed=None)
        b = batches[0]
        assert b.inputs.shape == (2, 3, 88)
        assert sorted(b.mask.sum(axis=1).tolist()) == [1.0, 3.0]
        short = int(np.argmin(b.mask.sum(axis=1)))
        assert b.inputs[short, 1:].sum() == 0  # padded frames all-zero

    def test_short_sequences_dropped(self):
        batches = to_batches([[(1,)], []], batch_size=2)
        assert batches == []

    @given(st.integers(0, 2**31 - 1))
    @settings(max_examples=10, deadline=None)
    def test_targets_reconstruct_split(self, seed):
        rng = np.random.default_rng(seed % 1000)
        split = []
        for _ in range(7):
            length = int(rng.integers(1, 6))
            split.append(
                [tuple(sorted(rng.choice(88, size=rng.integers(0, 4), replace=False).tolist()))
                 for _ in range(length)]
            )
        batches = to_batches(split, batch_size=3, seed=seed)
        # reassemble every batched sequence from inputs/targets using the mask
        seen = []
        for b in batches:
            for i in range(b.inputs.shape[0]):
                t = int(b.mask[i].sum())
                frames = np.concatenate([b.inputs[i, :t], b.targets[i, t - 1 : t]], axis=0)
                seq = [tuple(np.flatnonzero(f).tolist()) for f in frames]
                seen.append(seq)
        expected = sorted(tuple(s) for s in split if len(s) >= 2)
        assert sorted(tuple(s) for s in seen) == expected

    def test_shuffle_deterministic(self):
        split = [[(i,), (i + 1,)] for i in range(10)]
        a = to_batches(split, 3, seed=5)
        b = to_batches(split, 3, seed=5)
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x.inputs, y.inputs)

    def test_bad_batch_size(self):
        with pytest.raises(ValueError):
            to_batches([], 0)

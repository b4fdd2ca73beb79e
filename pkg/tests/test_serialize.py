"""Artifact round trips and byte determinism."""

import numpy as np
import pytest

from sompsnet import FeaturePipeline, FormatError, SplitSpec, load_corpus, stratified_split
from sompsnet.serialize import (
    load_corpus_artifact,
    load_features,
    read_tensor_archive,
    save_corpus,
    save_features,
    write_corpus_jsonl,
    write_tensor_archive,
)


class TestTensorArchive:
    def test_roundtrip(self, tmp_path):
        path = tmp_path / "t.bin"
        tensors = {
            "a/x": np.arange(6, dtype=np.float32).reshape(2, 3),
            "a/y": np.linspace(0, 1, 4, dtype=np.float64),
            "b": np.array([[1, 2], [3, 4]], dtype=np.int64),
        }
        meta = {"kind": "features", "note": {"nested": [1, 2]}}
        write_tensor_archive(path, meta, tensors)
        got_meta, got = read_tensor_archive(path)
        assert got_meta == meta
        for name, arr in tensors.items():
            np.testing.assert_array_equal(got[name], arr)
            assert got[name].dtype == arr.dtype

    def test_deterministic_bytes(self, tmp_path):
        tensors = {"x": np.ones((3, 3), dtype=np.float32), "y": np.zeros(2)}
        write_tensor_archive(tmp_path / "a.bin", {"k": 1}, tensors)
        write_tensor_archive(tmp_path / "b.bin", {"k": 1}, tensors)
        assert (tmp_path / "a.bin").read_bytes() == (tmp_path / "b.bin").read_bytes()

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "junk.bin"
        path.write_bytes(b"NOPE" + b"\x00" * 32)
        with pytest.raises(FormatError):
            read_tensor_archive(path)

    def test_bad_version_rejected(self, tmp_path):
        path = tmp_path / "future.bin"
        path.write_bytes(b"SNTA" + (99).to_bytes(4, "little") + (2).to_bytes(8, "little") + b"{}")
        with pytest.raises(FormatError):
            read_tensor_archive(path)


class TestCorpusArtifact:
    def test_roundtrip(self, tmp_path, synth_corpus):
        path = tmp_path / "corpus.bin"
        save_corpus(path, synth_corpus)
        loaded = load_corpus_artifact(path)
        assert loaded.news == synth_corpus.news
        assert loaded.engagements == synth_corpus.engagements
        assert loaded.users == synth_corpus.users
        assert loaded.quality.to_dict() == synth_corpus.quality.to_dict()

    def test_jsonl_export_reingests_identically(self, tmp_path, synth_corpus):
        paths = write_corpus_jsonl(synth_corpus, tmp_path)
        reloaded = load_corpus(paths["news"], paths["engagements"], paths["users"])
        assert reloaded.news == synth_corpus.news
        assert reloaded.engagements == synth_corpus.engagements
        assert reloaded.users == synth_corpus.users

    def test_wrong_kind_rejected(self, tmp_path):
        path = tmp_path / "x.json"
        path.write_text('{"kind":"report","format_version":1}')
        with pytest.raises(FormatError):
            load_corpus_artifact(path)


class TestFeatureArchive:
    def test_roundtrip(self, tmp_path, synth_corpus, synth_table):
        splits = stratified_split(synth_corpus, SplitSpec(seed=13))
        pipe = FeaturePipeline.fit(synth_corpus, splits.train, synth_table)
        features, _ = pipe.transform_corpus(synth_corpus)
        path = tmp_path / "features.bin"
        meta = {"config": {"seed": 13}, "splits": splits.to_dict()}
        save_features(path, meta, features)
        got_meta, got = load_features(path)
        assert got_meta["splits"] == splits.to_dict()
        assert set(got) == set(features)
        sample = next(iter(features))
        # stored as float32
        np.testing.assert_array_equal(
            got[sample].pns, features[sample].pns.astype(np.float32).astype(np.float64)
        )
        assert got[sample].label == features[sample].label
        assert got[sample].valid_tweet_users == features[sample].valid_tweet_users

import json
import struct

import numpy as np
import pytest

from orthoprobe.embeddings import MAGIC, EmbeddingSet, read_embeddings, write_embeddings
from orthoprobe.errors import EmbeddingFormatError


def make_set(sentences, dim, language="xx", layer=7):
    return EmbeddingSet(language=language, layer=layer, dim=dim,
                        sentences=[np.asarray(s, dtype=np.float32) for s in sentences])


class TestRoundTrip:
    def test_small(self, tmp_path):
        rng = np.random.default_rng(0)
        emb = make_set([rng.normal(size=(3, 4)), rng.normal(size=(1, 4))], dim=4)
        path = tmp_path / "e.opemb"
        write_embeddings(emb, path)
        back = read_embeddings(path)
        assert back.language == "xx" and back.layer == 7 and back.dim == 4
        assert len(back.sentences) == 2
        for a, b in zip(emb.sentences, back.sentences):
            assert np.array_equal(a, b)

    def test_100_random_sentences_byte_level(self, tmp_path):
        rng = np.random.default_rng(1)
        sents = [rng.normal(size=(int(rng.integers(1, 30)), 16)).astype(np.float32)
                 for _ in range(100)]
        emb = make_set(sents, dim=16)
        p1, p2 = tmp_path / "a.opemb", tmp_path / "b.opemb"
        write_embeddings(emb, p1)
        write_embeddings(read_embeddings(p1), p2)
        assert p1.read_bytes() == p2.read_bytes()
        for a, b in zip(sents, read_embeddings(p2).sentences):
            assert a.tobytes() == b.tobytes()

    def test_empty_file(self, tmp_path):
        emb = make_set([], dim=8)
        path = tmp_path / "e.opemb"
        write_embeddings(emb, path)
        assert len(read_embeddings(path).sentences) == 0


class TestErrors:
    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.opemb"
        path.write_bytes(b"NOPE!!\n" + b"{}")
        with pytest.raises(EmbeddingFormatError, match="magic"):
            read_embeddings(path)

    def test_dim_mismatch_at_write(self, tmp_path):
        emb = make_set([np.zeros((2, 767))], dim=768)
        with pytest.raises(EmbeddingFormatError, match="sentence 0"):
            write_embeddings(emb, tmp_path / "e.opemb")

    def test_nan_rejected_at_write(self, tmp_path):
        mat = np.zeros((2, 4), dtype=np.float32)
        mat[1, 2] = np.nan
        emb = make_set([np.zeros((1, 4)), mat], dim=4)
        with pytest.raises(EmbeddingFormatError, match="sentence 1"):
            write_embeddings(emb, tmp_path / "e.opemb")

    def test_nonfinite_rejected_at_read(self, tmp_path):
        path = tmp_path / "e.opemb"
        header = {"dim": 2, "layer": 7, "language": "xx", "count": 1, "dtype": "f32le"}
        payload = np.array([[1.0, np.inf]], dtype="<f4").tobytes()
        path.write_bytes(MAGIC + json.dumps(header).encode() + b"\n"
                         + struct.pack("<I", 1) + payload)
        with pytest.raises(EmbeddingFormatError, match="non-finite"):
            read_embeddings(path)

    def test_truncation_names_sentence(self, tmp_path):
        path = tmp_path / "e.opemb"
        header = {"dim": 4, "layer": 7, "language": "xx", "count": 2, "dtype": "f32le"}
        one = struct.pack("<I", 1) + np.zeros((1, 4), dtype="<f4").tobytes()
        path.write_bytes(MAGIC + json.dumps(header).encode() + b"\n" + one)
        with pytest.raises(EmbeddingFormatError, match="sentence 1"):
            read_embeddings(path)

    def test_trailing_bytes(self, tmp_path):
        emb = make_set([np.zeros((1, 4))], dim=4)
        path = tmp_path / "e.opemb"
        write_embeddings(emb, path)
        path.write_bytes(path.read_bytes() + b"junk")
        with pytest.raises(EmbeddingFormatError, match="trailing"):
            read_embeddings(path)

    def test_missing_header_key(self, tmp_path):
        path = tmp_path / "e.opemb"
        path.write_bytes(MAGIC + b'{"dim": 4}\n')
        with pytest.raises(EmbeddingFormatError, match="header"):
            read_embeddings(path)

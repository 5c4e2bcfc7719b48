"""Binary embedding files (OPEMB1 format).

Layout: magic ``OPEMB1\\n``, one JSON header line
``{"dim":int,"layer":int,"language":str,"count":int,"dtype":"f32le"}``,
then per sentence a little-endian uint32 word count followed by
``word_count * dim`` little-endian float32 values, row-major.  Values
must be finite; writers reject NaN/Inf and readers re-check.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

from .errors import EmbeddingFormatError

MAGIC = b"OPEMB1\n"


@dataclass
class EmbeddingSet:
    language: str
    layer: int
    dim: int
    sentences: list  # float32 arrays, shape (word_count, dim)

    def __len__(self):
        return len(self.sentences)


def write_embeddings(emb, path):
    """Write an EmbeddingSet to ``path``; round-trips bit-exactly."""
    header = {
        "dim": int(emb.dim),
        "layer": int(emb.layer),
        "language": emb.language,
        "count": len(emb.sentences),
        "dtype": "f32le",
    }
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(json.dumps(header).encode("utf-8") + b"\n")
        for idx, mat in enumerate(emb.sentences):
            arr = np.ascontiguousarray(mat, dtype="<f4")
            if arr.ndim != 2 or arr.shape[1] != emb.dim:
                raise EmbeddingFormatError(
                    f"sentence {idx}: expected shape (*, {emb.dim}), got {arr.shape}"
                )
            if not np.isfinite(arr).all():
                raise EmbeddingFormatError(f"sentence {idx}: non-finite values")
            fh.write(struct.pack("<I", arr.shape[0]))
            fh.write(arr.tobytes())


def read_embeddings(path):
    """Read an OPEMB1 file into an EmbeddingSet."""
    with open(path, "rb") as fh:
        magic = fh.read(len(MAGIC))
        if magic != MAGIC:
            raise EmbeddingFormatError(f"{path}: bad magic {magic!r}")
        header_line = fh.readline()
        try:
            header = json.loads(header_line.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as err:
            raise EmbeddingFormatError(f"{path}: bad header: {err}") from err
        for key in ("dim", "layer", "language", "count", "dtype"):
            if key not in header:
                raise EmbeddingFormatError(f"{path}: header missing {key!r}")
        if header["dtype"] != "f32le":
            raise EmbeddingFormatError(f"{path}: unsupported dtype {header['dtype']!r}")
        dim = int(header["dim"])
        count = int(header["count"])
        sentences = []
        for idx in range(count):
            raw_len = fh.read(4)
            if len(raw_len) != 4:
                raise EmbeddingFormatError(
                    f"{path}: truncated at sentence {idx} (word count)"
                )
            (n_words,) = struct.unpack("<I", raw_len)
            payload = fh.read(4 * n_words * dim)
            if len(payload) != 4 * n_words * dim:
                raise EmbeddingFormatError(f"{path}: truncated at sentence {idx} (data)")
            mat = np.frombuffer(payload, dtype="<f4").reshape(n_words, dim)
            if not np.isfinite(mat).all():
                raise EmbeddingFormatError(f"{path}: non-finite values in sentence {idx}")
            sentences.append(mat)
        if fh.read(1):
            raise EmbeddingFormatError(f"{path}: trailing bytes after {count} sentences")
    return EmbeddingSet(
        language=header["language"], layer=int(header["layer"]), dim=dim, sentences=sentences
    )
